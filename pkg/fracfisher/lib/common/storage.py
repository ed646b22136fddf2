import os
import tempfile
import typing as tp
from pathlib import Path

from pydantic import BaseModel

from ..proto import RepositoryProtocol
from ..utils import get_logger

logger = get_logger(__name__)


class StoredObject(BaseModel):
    key: str
    body: bytes


class ArtifactStore(RepositoryProtocol[StoredObject, StoredObject]):
    """Local directory of experiment artifacts.

    Every object is written once through a temporary file in the target
    directory followed by ``os.replace``, so readers never observe a partial
    report.
    """

    def __init__(self, root: str | os.PathLike[str]) -> None:
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        path = (self.root / key).resolve()
        if self.root.resolve() not in path.parents:
            raise ValueError(f"artifact key escapes the output directory: {key}")
        return path

    def create(self, *, params: StoredObject) -> StoredObject:
        path = self._path(params.key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(params.body)
            os.replace(tmp, path)
        except Exception:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.debug("wrote %s (%d bytes)", path, len(params.body))
        return params

    def retrieve(self, *, id: str) -> StoredObject:
        return StoredObject(key=id, body=self._path(id).read_bytes())

    def delete(self, *, id: str) -> None:
        self._path(id).unlink(missing_ok=True)

    def list(
        self, *, after: str | None = None, limit: int | None = None
    ) -> tp.Iterator[StoredObject]:
        if not self.root.exists():
            return
        prefix = after or ""
        count = 0
        for path in sorted(self.root.iterdir()):
            if not path.is_file() or path.name.startswith("."):
                continue
            if not path.name.startswith(prefix):
                continue
            if limit is not None and count >= limit:
                break
            yield StoredObject(key=path.name, body=path.read_bytes())
            count += 1
