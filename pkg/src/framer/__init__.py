"""Tagged-address capability scheme over a simulated address space."""
from .frames import (
    UNTAGGED, FrameTag, LargeFramed, SmallFramed, TagConfig, Untagged, WrapperFrame,
    categorize, decode, derive_small_md, encode, in_frame, strip, wrapper_frame,
)
from .heap import AllocationRecord, HeapConfig, ObjectHeader, ObjectState, SimHeap
from .monitor import Monitor, MonitorPolicy, Outcome, Verdict
from .oracle import Classification, Oracle
from .shadow import ShadowTable
from .trace import TraceProgram, parse
from .typelayer import TypeRegistry
from .vm import RunReport, run

__version__ = "0.1.0"
