"""Historical appearance cue: a bounded, aged, spaced list of confident templates."""

from __future__ import annotations

from .core import BoundingBox, CueEntry, TrackerConfig


def prune_cue(cue: list[CueEntry], current_frame: int, cfg: TrackerConfig) -> list[CueEntry]:
    """Drop oldest entries until the length and age limits both hold."""
    out = list(cue)
    while out and (len(out) > cfg.tau_cue or current_frame - out[0].frame > cfg.max_age):
        out.pop(0)
    return out


def can_add(cue: list[CueEntry], confidence: float, frame: int, cfg: TrackerConfig) -> bool:
    if confidence <= cfg.tau_hist:
        return False
    return not cue or frame - cue[-1].frame >= cfg.min_interval


def maybe_add(cue: list[CueEntry], confidence: float, descriptor, frame: int,
              cfg: TrackerConfig, box: BoundingBox | None = None) -> list[CueEntry]:
    """Append the recent appearance if confident and spaced enough, then prune.

    A rejected candidate leaves the cue untouched.
    """
    if not can_add(cue, confidence, frame, cfg):
        return cue
    return prune_cue([*cue, CueEntry(confidence, descriptor, frame, box)], frame, cfg)


def check_invariants(cue: list[CueEntry], current_frame: int, cfg: TrackerConfig) -> list[str]:
    """Names of violated cue constraints (empty when the cue is well formed)."""
    problems = []
    if len(cue) > cfg.tau_cue:
        problems.append("length")
    if cue and current_frame - cue[0].frame > cfg.max_age:
        problems.append("age")
    for prev, cur in zip(cue, cue[1:]):
        if cur.frame <= prev.frame or cur.frame - prev.frame < cfg.min_interval:
            problems.append("interval")
            break
    if any(e.confidence <= cfg.tau_hist for e in cue):
        problems.append("confidence")
    return problems
