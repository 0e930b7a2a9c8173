"""Resumable long runs: checkpoint records and the hunt loop that writes them."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass

from .bigint import from_decimal, to_decimal
from .trajectory import DEFAULT_MAX_BITS, StopPolicy, Trajectory, Walker

__all__ = ["CheckpointRecord", "CheckpointError", "write_checkpoint", "read_checkpoint", "hunt", "FORMAT_VERSION"]

FORMAT_VERSION = 1
MIN_INTERVAL = 10**4


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class CheckpointRecord:
    program: str
    n0: int
    iterations_done: int
    value: int
    max_value: int
    rule_fire_counts: tuple
    leading_up_steps: int
    leading_open: bool
    version: int = FORMAT_VERSION

    @property
    def max_bits_seen(self):
        return self.max_value.bit_length()

    def to_dict(self):
        out = asdict(self)
        for key in ("n0", "value", "max_value"):
            out[key] = to_decimal(out[key])
        out["rule_fire_counts"] = list(self.rule_fire_counts)
        out["max_bits_seen"] = self.max_bits_seen
        return out

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"checkpoint version {d.get('version')!r}, expected {FORMAT_VERSION}")
        try:
            rec = cls(
                program=str(d["program"]),
                n0=_decimal(d["n0"]),
                iterations_done=int(d["iterations_done"]),
                value=_decimal(d["value"]),
                max_value=_decimal(d["max_value"]),
                rule_fire_counts=tuple(int(c) for c in d["rule_fire_counts"]),
                leading_up_steps=int(d["leading_up_steps"]),
                leading_open=bool(d["leading_open"]),
                version=FORMAT_VERSION,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed checkpoint: {exc}") from exc
        if "max_bits_seen" in d and d["max_bits_seen"] != rec.max_bits_seen:
            raise CheckpointError("max_bits_seen does not match max_value")
        if sum(rec.rule_fire_counts) != rec.iterations_done:
            raise CheckpointError("rule counts do not add up to iterations_done")
        return rec


def _decimal(text):
    if not isinstance(text, str) or not text.isdigit():
        raise CheckpointError(f"expected a decimal string, got {text[:40]!r}")
    return from_decimal(text)


def write_checkpoint(record: CheckpointRecord, path):
    """Write ``record`` as JSON; readers see the old file or the new one, never a mix."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".ckpt-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(record.to_dict(), fh, indent=2)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path) -> CheckpointRecord:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CheckpointError("checkpoint is not a JSON object")
    return CheckpointRecord.from_dict(data)


def _record(program, walker):
    return CheckpointRecord(
        program.id, walker.n0, walker.length, int(walker.n), int(walker.max_value),
        tuple(walker.counts), walker.leading_up, walker.leading_open,
    )


def hunt(program, n0, minima, max_iterations, max_bits=DEFAULT_MAX_BITS, checkpoint=None,
         every=10**6, resume=None, progress=None) -> Trajectory:
    """Follow one orbit to a known loop minimum, checkpointing every ``every`` steps.

    ``resume`` continues from a record (its program must match).  ``progress``
    is called with each record written.  No cycle detection is done; the
    target minima must be known.
    """
    if every < MIN_INTERVAL:
        raise ValueError(f"checkpoint interval must be >= {MIN_INTERVAL}")
    policy = StopPolicy(frozenset(minima), max_iterations, max_bits)
    if resume is not None:
        if resume.program != program.id:
            raise CheckpointError(f"checkpoint is for {resume.program}, not {program.id}")
        walker = Walker(program, resume.n0, length=resume.iterations_done, value=resume.value,
                        max_value=resume.max_value, counts=resume.rule_fire_counts,
                        leading_up=resume.leading_up_steps, leading_open=resume.leading_open)
    else:
        walker = Walker(program, n0)
    while True:
        target = min(policy.max_iterations, (walker.length // every + 1) * every)
        reason = walker.advance(policy.known_loop_minima, target, policy.max_bits, detect=False)
        if reason != "iteration_cap" or walker.length >= policy.max_iterations:
            break
        rec = _record(program, walker)
        if checkpoint is not None:
            write_checkpoint(rec, checkpoint)
        if progress is not None:
            progress(rec)
    if checkpoint is not None:
        write_checkpoint(_record(program, walker), checkpoint)
    resolved = reason == "converged"
    return Trajectory(
        n0=walker.n0,
        outcome=reason,
        length=walker.length,
        max_value=int(walker.max_value),
        rule_fire_counts=tuple(walker.counts),
        leading_up_steps=walker.leading_up,
        loop_min=int(walker.n) if resolved else None,
    )
