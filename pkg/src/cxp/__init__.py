"""Control exchange point toolkit: pathlet topologies, QoS path stitching,
an epoch-driven orchestration simulator and IXP feasibility analysis."""

from cxp.errors import (
    ChainError,
    CxpError,
    DatasetError,
    DuplicatePathletId,
    DuplicateRequest,
    InsufficientResidual,
    InvalidPathlet,
    MalformedPrefix,
    MalformedScenario,
    MissingSample,
    UnknownIxp,
    UnknownPathlet,
    UnknownRequest,
)
from cxp.pathlet import (
    EmbeddedPath,
    GuaranteeMode,
    Pathlet,
    ServiceRequest,
    path_delay,
    validate_pathlet,
)
from cxp.stitching import (
    Admission,
    Rejected,
    RejectionReason,
    StitchPolicy,
    admit,
    migrate_for_admission,
    stitch_path,
    stitch_with_backup,
)
from cxp.topology import VirtualTopology

from cxp._version import __version__

__all__ = [
    "Admission",
    "ChainError",
    "CxpError",
    "DatasetError",
    "DuplicatePathletId",
    "DuplicateRequest",
    "EmbeddedPath",
    "GuaranteeMode",
    "InsufficientResidual",
    "InvalidPathlet",
    "MalformedPrefix",
    "MalformedScenario",
    "MissingSample",
    "Pathlet",
    "Rejected",
    "RejectionReason",
    "ServiceRequest",
    "StitchPolicy",
    "UnknownIxp",
    "UnknownPathlet",
    "UnknownRequest",
    "VirtualTopology",
    "admit",
    "migrate_for_admission",
    "path_delay",
    "stitch_path",
    "stitch_with_backup",
    "validate_pathlet",
]
