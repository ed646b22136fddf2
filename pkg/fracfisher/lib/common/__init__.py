from .storage import ArtifactStore, StoredObject
from .db import ReportDocument, dumps

__all__ = [
    "ArtifactStore",
    "StoredObject",
    "ReportDocument",
    "dumps",
]
