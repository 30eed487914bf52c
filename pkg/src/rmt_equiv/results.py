"""Shared experiment result record and its CSV serialization."""

from dataclasses import dataclass

CSV_HEADER = "ratio,gamma,metric,empirical_mean,empirical_stderr,theory,trials,status"


@dataclass
class ResultRow:
    """One sweep record: empirical statistic against its theoretical value."""

    ratio: float
    gamma: float
    metric: str
    empirical_mean: float
    empirical_stderr: float
    theory: float  # nan when theory is singular at this point
    trials: int
    status: str = "ok"


def _fmt(x):
    # 9 significant digits; empty field for missing values
    if x is None or (isinstance(x, float) and x != x):
        return ""
    return f"{x:.9g}"


def write_rows(path, rows):
    """Write ResultRows sorted by (gamma, ratio) with 9-significant-digit values."""
    ordered = sorted(rows, key=lambda r: (r.gamma, r.ratio, r.metric))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in ordered:
            fh.write(
                f"{_fmt(r.ratio)},{_fmt(r.gamma)},{r.metric},"
                f"{_fmt(r.empirical_mean)},{_fmt(r.empirical_stderr)},"
                f"{_fmt(r.theory)},{r.trials},{r.status}\n"
            )
    return path
