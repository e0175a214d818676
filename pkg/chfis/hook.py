"""Contains the `Hook` class."""

from __future__ import annotations

from bisect import insort
from collections.abc import Iterator
from typing import Any, Callable, Literal, Self

__all__ = ["Hook"]


class Hook[**TParams, TReturn]:
    """
    A `Hook` that can have callbacks registered to it. Long-running operations use them to report progress.

    ## Examples
    ### Simple usage:
    ```python
    from chfis import Hook, build_model, load_sample, solve_surface

    on_level = Hook[[int, int, int], None]()

    on_level += lambda level, nx, ny: print(f"level {level}: {nx} x {ny}")

    sample = load_sample("table1")
    solve_surface(build_model(sample.dataset, sample.resolve()), 4, on_level=on_level)
    ```

    ### Decorator and priority:
    ```python
    from chfis import Hook

    on_report = Hook[[int, object], None]()


    @on_report
    def log_it(seed: int, report: object) -> None:
        print("This will execute second")


    on_report.add_callback(lambda seed, report: print("This will execute first"), priority=100)
    ```

    ### Gathering results from callbacks:
    ```python
    from chfis import Hook

    on_value = Hook[[float], float]()

    on_value += lambda v: v**2
    on_value += lambda v: v**3

    print(on_value.notify(3))  # [9, 27]
    ```
    """

    def __init__(self, callbacks: list[Callable[TParams, TReturn]] | None = None, /) -> None:
        self._callbacks: list[tuple[Callable[TParams, TReturn], int]] = [
            (c, 0) for c in callbacks or []
        ]

    def __iter__(self) -> Iterator[Callable[TParams, TReturn]]:
        return iter([c for c, _ in self._callbacks])

    def __len__(self) -> int:
        return len(self._callbacks)

    def __call__[TCallable: Callable[..., Any]](self, callback: TCallable, /) -> TCallable:
        self.add_callback(callback)
        return callback

    def __iadd__(self, callback: Callable[TParams, TReturn], /) -> Self:
        self.add_callback(callback)
        return self

    def add_callback(
        self,
        callback: Callable[TParams, TReturn],
        /,
        *,
        priority: Literal["min", "max"] | int = 0,
    ) -> None:
        """
        Adds a callback to the list of callbacks. Equal priorities run in registration order.

        Parameters
        ----------
        callback: `Callable[TParams, TReturn]`
            The callback to add.
        priority: `Literal["min", "max"] | int`
            The priority of the callback, higher runs first.\n
            `"min"` puts the callback below the current lowest priority (`-100` if it's the first one).\n
            `"max"` puts the callback above the current highest priority (`100` if it's the first one).
        """

        if priority == "min":
            priority = min((p for _, p in self._callbacks), default=-99) - 1
        elif priority == "max":
            priority = max((p for _, p in self._callbacks), default=99) + 1

        insort(self._callbacks, (callback, priority), key=lambda x: -x[1])

    def notify(self, /, *args: TParams.args, **kwargs: TParams.kwargs) -> list[TReturn]:
        """
        Notifies all callbacks, highest priority first.

        Returns
        -------
        `list[TReturn]`
            The values returned by the callbacks.
        """

        return [callback(*args, **kwargs) for callback in self]
