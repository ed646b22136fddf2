import typing as tp

import numpy as np
from numpy.typing import NDArray
from typing_extensions import ParamSpec, Protocol, runtime_checkable

# Type variables
T = tp.TypeVar("T")
T_co = tp.TypeVar("T_co", covariant=True)
T_con = tp.TypeVar("T_con", contravariant=True)
M_co = tp.TypeVar("M_co", covariant=True)
P = ParamSpec("P")

FloatArray: tp.TypeAlias = NDArray[np.float64]
ComplexArray: tp.TypeAlias = NDArray[np.complex128]


# CharacteristicFunction interface
@runtime_checkable
class CharacteristicFunction(Protocol):
    def value(self, xi: FloatArray) -> ComplexArray: ...
    def derivative(self, xi: FloatArray) -> ComplexArray: ...


# RepositoryProtocol interface
class RepositoryProtocol(tp.Generic[T_con, M_co], Protocol):
    def create(self, *, params: T_con) -> M_co: ...
    def retrieve(self, *, id: str) -> M_co: ...
    def delete(self, *, id: str) -> None: ...
    def list(
        self,
        /,
        *,
        after: str | None,
        limit: int | None,
    ) -> tp.Iterator[M_co]: ...


# ExperimentProtocol interface
class ExperimentProtocol(tp.Generic[T_con, T_co], Protocol):
    def run(self, *, params: T_con) -> T_co: ...
