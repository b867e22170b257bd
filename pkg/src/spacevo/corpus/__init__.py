"""Reference priority functions shipped as package data.

``verbatim`` entries are the listings as printed.  Programs 1-8 lost the
tail of every line containing a ``%`` during typesetting, so they do not
parse; Program 1 also ships a ``reconstructed`` variant with those tails
closed as ``% n]``.  Programs 9 and 10 were written against array bins and
ship ``scalar`` translations for the per-bin priority signature.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    filename: str
    problem: str
    params: dict
    status: str  # complete | incomplete | reconstructed | translated
    reported_score: float | None = None

    def text(self) -> str:
        return resources.files(__name__).joinpath(self.filename).read_text(encoding="utf-8")


_ENTRIES = [
    CorpusEntry("program_1", "program_1.py.txt", "admissible", {"n": 27, "w": 19}, "incomplete"),
    CorpusEntry("program_1_reconstructed", "program_1_reconstructed.py.txt", "admissible",
                {"n": 27, "w": 19}, "reconstructed"),
    CorpusEntry("program_2", "program_2.py.txt", "admissible", {"n": 21, "w": 15}, "incomplete", 43650),
    CorpusEntry("program_3", "program_3.py.txt", "admissible", {"n": 27, "w": 19}, "incomplete", 1270863),
    CorpusEntry("program_4", "program_4.py.txt", "capset", {"n": 8}, "incomplete", 512),
    CorpusEntry("program_5", "program_5.py.txt", "capset", {"n": 8}, "incomplete", 512),
    CorpusEntry("program_6", "program_6.py.txt", "capset", {"n": 8}, "incomplete", 512),
    CorpusEntry("program_7", "program_7.py.txt", "cyclegraph", {"m": 11, "n": 4}, "incomplete", 754),
    CorpusEntry("program_8", "program_8.py.txt", "cyclegraph", {"m": 15, "n": 5}, "incomplete", 19946),
    CorpusEntry("program_9", "program_9.py.txt", "binpacking-or", {}, "complete"),
    CorpusEntry("program_9_scalar", "program_9_scalar.py.txt", "binpacking-or", {}, "translated"),
    CorpusEntry("program_10", "program_10.py.txt", "binpacking-weibull", {}, "complete"),
    CorpusEntry("program_10_scalar", "program_10_scalar.py.txt", "binpacking-weibull", {},
                "translated"),
]

CORPUS = {e.name: e for e in _ENTRIES}


def get(name: str) -> CorpusEntry:
    try:
        return CORPUS[name]
    except KeyError:
        raise KeyError(f"unknown corpus program {name!r}; known: {', '.join(CORPUS)}") from None
