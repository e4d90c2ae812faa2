"""Result records produced by the inequality and identity checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

# status values
PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"
REPORT = "report-only"
PRECONDITION = "precondition-unmet"


@dataclass
class Check:
    """Outcome of evaluating one explicit statement on one instance.

    ``lhs`` and ``rhs`` are the two sides of the inequality or identity.
    Hard checks carry ``pass``/``fail`` (``vacuous`` when the bound is no
    better than the trivial one); implicit-constant statements carry
    ``report-only`` together with the measured ``ratio``.
    """

    lemma: str
    lhs: float
    rhs: float
    status: str
    ratio: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.status in (PASS, VACUOUS):
            return True
        if self.status == FAIL:
            return False
        return None

    def to_dict(self) -> dict:
        return asdict(self)


def hard(lemma: str, lhs, rhs, ok: bool, **detail) -> Check:
    return Check(lemma, float(lhs), float(rhs), PASS if ok else FAIL, detail=detail)


def report(lemma: str, lhs, rhs, ratio, **detail) -> Check:
    return Check(lemma, float(lhs), float(rhs), REPORT, ratio=float(ratio), detail=detail)
