from .proto import CharacteristicFunction, ExperimentProtocol, RepositoryProtocol
from .utils import (
    get_logger,
    asyncify,
    gather_threads,
    handle,
    merge_dicts,
    ttl_cache,
)
from .common import ArtifactStore, StoredObject, ReportDocument, dumps
from . import errors

__all__ = [
    "CharacteristicFunction",
    "ExperimentProtocol",
    "RepositoryProtocol",
    "get_logger",
    "asyncify",
    "gather_threads",
    "handle",
    "merge_dicts",
    "ttl_cache",
    "ArtifactStore",
    "StoredObject",
    "ReportDocument",
    "dumps",
    "errors",
]
