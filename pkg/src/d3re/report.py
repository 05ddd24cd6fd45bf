"""Reports: delimited summaries plus rendered figures.

Two report paths:

* session report -- relation cardinalities and annotations of one
  session, as TSV plus a bar chart.
* chain benchmark -- run the four-step extension chain (stack_var ->
  heap_var -> use_def_global -> uninitialized) once with snapshot
  reuse and once from scratch, and compare the engine's join-work
  counters step by step.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .datalog import EvalStats, evaluate, merge_programs, parse_program
from .facts import base_schema, load_fact_dir, session_base_program
from .metadb import MetaDatabase
from .rulelib import registry
from .session import Session, format_cell, open_session

CHAIN_STEPS = ("stack_var", "heap_var", "use_def_global", "uninitialized")


# -- session report ---------------------------------------------------------


def write_session_report(session: Session, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    db = session.database()
    written = []

    rel_tsv = out / "relations.tsv"
    with open(rel_tsv, "w", encoding="utf-8") as fh:
        fh.write("relation\ttuples\n")
        for name in sorted(session.program.declarations):
            fh.write(f"{name}\t{len(db.relation(name))}\n")
    written.append(rel_tsv)

    ann_tsv = out / "annotations.tsv"
    with open(ann_tsv, "w", encoding="utf-8") as fh:
        fh.write("kind\taddress\ttext\tsource_relation\n")
        for a in session.annotations:
            fh.write(
                f"{a.kind}\t{format_cell(a.address)}\t{a.text or ''}\t"
                f"{a.source_relation}\n"
            )
    written.append(ann_tsv)

    nonempty = sorted(db.nonempty().items(), key=lambda kv: -len(kv[1]))[:20]
    fig, ax = plt.subplots(figsize=(8, max(2.5, 0.35 * len(nonempty))))
    names = [n for n, _ in nonempty][::-1]
    counts = [len(ts) for _, ts in nonempty][::-1]
    ax.barh(names, counts, color="#4878d0")
    ax.set_xlabel("tuples")
    ax.set_title(f"session {session.session_id}: relation sizes")
    fig.tight_layout()
    fig_path = out / "relations.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written


# -- chain benchmark -----------------------------------------------------------


@dataclass
class ChainStep:
    name: str
    cached: EvalStats
    scratch: EvalStats

    @property
    def ratio(self) -> float:
        if self.scratch.join_work == 0:
            return 0.0
        return self.cached.join_work / self.scratch.join_work


def run_chain_benchmark(
    facts_dir: str | Path,
    store_dir: str | Path | None = None,
    steps: tuple[str, ...] = CHAIN_STEPS,
) -> list[ChainStep]:
    """Evaluate each chain prefix cached (through the metadatabase) and
    from scratch, returning the per-step work counters."""
    reg = registry()
    sources = [reg[name].source() for name in steps]

    results: list[ChainStep] = []
    with tempfile.TemporaryDirectory() as tmp:
        store = MetaDatabase(store_dir or tmp)
        session = open_session(store, str(facts_dir))
        cached_stats = [session.run(src).stats for src in sources]

    root_facts = load_fact_dir(facts_dir, base_schema())
    programs = []
    merged = session_base_program()
    for src in sources:
        merged = merge_programs(merged, parse_program(src))
        programs.append(merged)
    for name, cached, program in zip(steps, cached_stats, programs):
        scratch = EvalStats()
        evaluate(program, root_facts, scratch)
        results.append(ChainStep(name=name, cached=cached, scratch=scratch))
    return results


def write_chain_report(steps: list[ChainStep], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    tsv = out / "chain.tsv"
    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("step\tcached_join_work\tscratch_join_work\tratio\n")
        for s in steps:
            fh.write(
                f"{s.name}\t{s.cached.join_work}\t{s.scratch.join_work}\t"
                f"{s.ratio:.3f}\n"
            )
    written.append(tsv)

    fig, ax = plt.subplots(figsize=(8, 4))
    xs = range(len(steps))
    width = 0.38
    ax.bar(
        [x - width / 2 for x in xs],
        [s.cached.join_work for s in steps],
        width,
        label="cached",
        color="#4878d0",
    )
    ax.bar(
        [x + width / 2 for x in xs],
        [s.scratch.join_work for s in steps],
        width,
        label="from scratch",
        color="#d65f5f",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels([s.name for s in steps], rotation=15)
    ax.set_ylabel("join work (tuples examined + derivations)")
    ax.set_title("successive runs: snapshot reuse vs from-scratch")
    ax.legend()
    fig.tight_layout()
    fig_path = out / "chain.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written
