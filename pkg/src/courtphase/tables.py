"""CSV and aligned-text renderings of the phase table and the switch matrix."""
from __future__ import annotations

import io

from .phase import TABLE_ORDER, ClusterPhaseTable, TransitionMatrix


def _names(k: int) -> list[str]:
    return [f"C{c + 1}" for c in range(k)]


def phase_table_csv(table: ClusterPhaseTable) -> str:
    out = io.StringIO()
    out.write("cluster,n_frames," + ",".join(p.value for p in TABLE_ORDER) + ",majority\n")
    for c, name in enumerate(_names(table.k)):
        pct = ",".join(repr(float(v)) for v in table.percent[c])
        out.write(f"{name},{int(table.counts[c].sum())},{pct},{table.majority[c].value}\n")
    return out.getvalue()


def phase_table_text(table: ClusterPhaseTable) -> str:
    names = _names(table.k)
    w = 9
    lines = ["Cluster".ljust(w) + "".join(n.rjust(w) for n in names)]
    for r, p in enumerate(TABLE_ORDER):
        lines.append(p.value.ljust(w) + "".join(f"{table.percent[c, r]:.2f}".rjust(w) for c in range(table.k)))
    lines.append("Total".ljust(w) + "".join(f"{table.percent[c].sum():.2f}".rjust(w) for c in range(table.k)))
    lines.append("Majority".ljust(w) + "".join(m.value.rjust(w) for m in table.majority))
    return "\n".join(lines) + "\n"


def transition_csv(tm: TransitionMatrix) -> str:
    k = tm.counts.shape[0]
    out = io.StringIO()
    out.write("to\\from," + ",".join(_names(k)) + "\n")
    for i, name in enumerate(_names(k)):
        out.write(name + "," + ",".join(repr(float(v)) for v in tm.percent[i]) + "\n")
    return out.getvalue()


def transition_text(tm: TransitionMatrix) -> str:
    k = tm.counts.shape[0]
    names = _names(k)
    w = 9
    lines = ["to\\from".ljust(w) + "".join(n.rjust(w) for n in names)]
    for i, name in enumerate(names):
        lines.append(name.ljust(w) + "".join(f"{tm.percent[i, j]:.2f}".rjust(w) for j in range(k)))
    lines.append(f"switches: {tm.switch_count}")
    return "\n".join(lines) + "\n"
