"""Exploration rate monitor: fast/slow moving averages of explored-area change."""
from __future__ import annotations

from collections import deque
from itertools import islice

from .shepherd import Mode


class RateMonitor:
    """Per-robot crossover detector that nudges the compactness threshold.

    When the fast average of explored-cell increments falls below the slow
    one, the threshold grows if the robot has mostly been collecting (making
    herding likelier) and shrinks if it has mostly been herding.
    """

    def __init__(self, d_t: float, d_t_bounds: tuple[float, float], fma_window: int = 50,
                 sma_window: int = 200, adjust_factor: float = 0.2,
                 dominant_window: int | None = None, initial_count: int = 0,
                 trigger: str = "level"):
        if not 0 < fma_window < sma_window:
            raise ValueError("need 0 < fma_window < sma_window")
        lo, hi = d_t_bounds
        if not 0 < lo <= hi:
            raise ValueError("d_t_bounds must satisfy 0 < lower <= upper")
        if adjust_factor < 0 or adjust_factor >= 1:
            raise ValueError("adjust_factor must lie in [0, 1)")
        self.fma_window = int(fma_window)
        self.sma_window = int(sma_window)
        self.adjust_factor = float(adjust_factor)
        if trigger not in ("level", "edge"):
            raise ValueError("trigger must be 'level' or 'edge'")
        self.trigger = trigger
        self._was_below = False
        self.d_t_bounds = (float(lo), float(hi))
        self.d_t = min(max(float(d_t), lo), hi)
        self.dominant_window = int(dominant_window or fma_window)
        self.delta_e_history: deque[int] = deque(maxlen=self.sma_window)
        self.mode_history: deque[Mode] = deque(maxlen=self.dominant_window)
        self.last_count = int(initial_count)
        self.fma: float | None = None
        self.sma: float | None = None
        self.switch_events = 0

    def _window_mean(self, n: int) -> float:
        k = min(n, len(self.delta_e_history))
        # newest samples sit at the right end
        tail = islice(reversed(self.delta_e_history), k)
        return sum(tail) / k

    def record(self, explored_cells_now: int) -> "RateMonitor":
        delta = int(explored_cells_now) - self.last_count
        self.last_count = int(explored_cells_now)
        self.delta_e_history.append(delta)
        self.fma = self._window_mean(self.fma_window)
        self.sma = self._window_mean(self.sma_window)
        return self

    def note_mode(self, mode: Mode) -> None:
        self.mode_history.append(Mode(mode))

    def dominant_mode(self) -> Mode | None:
        if not self.mode_history:
            return None
        n_coll = sum(1 for m in self.mode_history if m is Mode.COLLECTING)
        n_herd = len(self.mode_history) - n_coll
        if n_coll == n_herd:
            return self.mode_history[-1]
        return Mode.COLLECTING if n_coll > n_herd else Mode.HERDING

    def maybe_switch(self, current_dominant_mode: Mode | None = None) -> bool:
        """Apply the crossover rule; returns True when ``d_t`` changed."""
        if self.fma is None or self.sma is None:
            raise ValueError("record() must be called before maybe_switch()")
        mode = current_dominant_mode if current_dominant_mode is not None else self.dominant_mode()
        below = self.fma < self.sma
        # "edge" adjusts only on the tick where FMA drops below SMA
        fire = below and not (self.trigger == "edge" and self._was_below)
        self._was_below = below
        if mode is None or not fire:
            return False
        lo, hi = self.d_t_bounds
        old = self.d_t
        if Mode(mode) is Mode.COLLECTING:
            self.d_t = min(self.d_t * (1.0 + self.adjust_factor), hi)
        else:
            self.d_t = max(self.d_t * (1.0 - self.adjust_factor), lo)
        changed = self.d_t != old
        if changed:
            self.switch_events += 1
        return changed
