from __future__ import annotations

import asyncio
import json
import logging
import os
import time
from functools import reduce, wraps
from typing import Any, Awaitable, Callable, Coroutine, Iterable, TypeVar, Union, cast

from cachetools import TTLCache, cached
from cachetools.keys import hashkey
from typing_extensions import ParamSpec

from .errors import FracFisherError

T = TypeVar("T")
R = TypeVar("R")
P = ParamSpec("P")

LOG_LEVEL_ENV = "FRACFISHER_LOG_LEVEL"


def ttl_cache(
    maxsize: int = 128, ttl: int = 3600 * 24 * 365
) -> Callable[[Callable[P, T]], Callable[P, T]]:
    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        """
        A decorator that wraps a function with caching functionality.

        Results are stored in a TTL (Time-To-Live) cache keyed on the hashable
        call arguments. Frozen grids and spectral laws are hashable, so the
        expensive law samples are computed once per (law, grid) pair.

        Args:
            func (Callable[P, T]): The function to be decorated.

        Returns:
            Callable[P, T]: The wrapped function with caching applied.
        """

        @wraps(func)
        @cached(cache=TTLCache[Any, T](maxsize, ttl), key=hashkey)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            return func(*args, **kwargs)

        return wrapper

    return decorator


def get_logger(
    name: str | None = None,
    level: int | str | None = None,
    format_string: str = json.dumps(
        {
            "timestamp": "%(asctime)s",
            "level": "%(levelname)s",
            "name": "%(name)s",
            "message": "%(message)s",
        }
    ),
) -> logging.Logger:
    """
    Configures and returns a logger with a specified name, level, and format.

    :param name: Name of the logger. Defaults to the package logger.
    :param level: Logging level. Falls back to $FRACFISHER_LOG_LEVEL, then INFO.
    :param format_string: Format string for log messages.
    :return: Configured logger.
    """
    if name is None:
        name = "fracfisher"
    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    logger_ = logging.getLogger(name)
    logger_.setLevel(level)
    if not logger_.handlers:
        ch = logging.StreamHandler()
        formatter = logging.Formatter(format_string)
        ch.setFormatter(formatter)
        logger_.addHandler(ch)
        logger_.propagate = False
    return logger_


logger = get_logger()


def exception_handler(
    func: Callable[P, T]
) -> Callable[P, Union[T, Coroutine[None, T, T]]]:
    """
    Decorator to log exceptions raised by a numerical operation.

    Domain errors and ``ValueError`` pass through unchanged; anything else is
    wrapped into :class:`FracFisherError` so callers see a single hierarchy.

    :param func: Function to be decorated.
    :return: Decorated function.
    """

    @wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except (FracFisherError, ValueError) as e:
            logger.error("%s in %s: %s", e.__class__.__name__, func.__name__, e)
            raise
        except Exception as e:
            logger.error("%s in %s: %s", e.__class__.__name__, func.__name__, e)
            raise FracFisherError(
                f"{func.__name__} failed: {e.__class__.__name__} => {e}"
            ) from e

    @wraps(func)
    async def awrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            func_ = cast(Awaitable[T], func(*args, **kwargs))
            return await func_
        except (FracFisherError, ValueError) as e:
            logger.error("%s in %s: %s", e.__class__.__name__, func.__name__, e)
            raise
        except Exception as e:
            logger.error("%s in %s: %s", e.__class__.__name__, func.__name__, e)
            raise FracFisherError(
                f"{func.__name__} failed: {e.__class__.__name__} => {e}"
            ) from e

    if asyncio.iscoroutinefunction(func):
        return awrapper
    return wrapper


def timing_handler(
    func: Callable[P, T]
) -> Callable[P, Union[T, Coroutine[None, T, T]]]:
    """
    Decorator to measure the time taken by a function.

    :param func: Function to be decorated.
    :return: Decorated function.
    """

    @wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        start = time.perf_counter()
        result = func(*args, **kwargs)
        logger.debug("%s took %.4f seconds", func.__name__, time.perf_counter() - start)
        return result

    @wraps(func)
    async def awrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        start = time.perf_counter()
        func_ = cast(Awaitable[T], func(*args, **kwargs))
        result = await func_
        logger.debug("%s took %.4f seconds", func.__name__, time.perf_counter() - start)
        return result

    if asyncio.iscoroutinefunction(func):
        return awrapper
    return wrapper


def handle(func: Callable[P, T]) -> Callable[P, T]:
    """
    Decorator combining exception logging and timing.

    :param func: Function to be decorated.
    :return: Decorated function.
    """
    return cast(
        Callable[P, T],
        reduce(lambda f, g: g(f), [exception_handler, timing_handler], func),  # type: ignore
    )


def asyncify(func: Callable[P, T]) -> Callable[P, Coroutine[None, T, T]]:
    """
    Decorator to convert a synchronous function to an asynchronous function.

    :param func: Synchronous function to be decorated.
    :return: Asynchronous function.
    """

    @wraps(func)
    async def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        return await asyncio.to_thread(func, *args, **kwargs)

    return wrapper


def gather_threads(func: Callable[..., R], items: Iterable[Any]) -> list[R]:
    """
    Evaluates ``func`` on every item in worker threads and returns the
    results in input order.

    numpy's FFT and special functions release the GIL, so independent grid
    computations overlap.
    """
    afunc = asyncify(func)

    async def _run() -> list[R]:
        return list(await asyncio.gather(*(afunc(item) for item in items)))

    return asyncio.run(_run())


def merge_dicts(*dicts: dict[str, T]) -> dict[str, T]:
    """
    Merges multiple dictionaries into one.
    """
    return {k: v for d in dicts for k, v in d.items()}
