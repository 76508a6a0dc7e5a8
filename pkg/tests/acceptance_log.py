"""Shared store for the one-line acceptance verdicts printed after the run."""

LINES = {}


def record(number: int, ok: bool, title: str, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    LINES[number] = line
    print(line)
