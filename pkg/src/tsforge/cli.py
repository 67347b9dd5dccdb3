"""Command line entry points: compose seeds, generate items, eval, review, export."""

from __future__ import annotations

import sys

import click

from . import signal_forge as sf


@click.group()
def main():
    """Build and score skill-annotated time-series QA benchmarks."""


@main.command()
@click.option("--n", default=10, show_default=True, help="Number of seeds.")
@click.option("--rng-seed", default=0, show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True)
def compose(n, rng_seed, pool_path, out):
    """Synthesize series seeds and write them as JSONL."""
    pool = sf.load_domain_pool(pool_path or sf.default_pool_path())
    seeds = []
    for i in range(n):
        s = rng_seed * 1_000_003 + i
        seeds.append(sf.compose_series(sf.sample_seed_plan(pool, s), s))
    sf.write_seeds(seeds, out)
    click.echo(f"wrote {len(seeds)} seeds to {out}")


@main.command()
@click.option("--n", default=10, show_default=True, help="Number of QA items.")
@click.option("--rng-seed", default=0, show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True, help="Items JSONL path.")
@click.option("--seeds-out", type=click.Path(), default=None, help="Also write the backing seeds.")
@click.option("--verify/--no-verify", default=True, show_default=True)
@click.option("--mcq/--no-mcq", "with_mcq", default=True, show_default=True)
def generate(n, rng_seed, pool_path, out, seeds_out, verify, with_mcq):
    """Generate QA items with the offline backend."""
    from .gateway import OfflineGateway
    from .mcq import attach_mcq
    from .pipeline import QAPipeline, write_items

    pool = sf.load_domain_pool(pool_path or sf.default_pool_path())
    pipe = QAPipeline(OfflineGateway(), pool=pool, rng_seed=rng_seed)
    items = pipe.generate(n, verify=verify)
    if with_mcq:
        attach_mcq(items, rng_seed=rng_seed, gateway=pipe.gateway)
    write_items(items, out)
    if seeds_out:
        sf.write_seeds([pipe.seed_for(i) for i in range(n)], seeds_out)
        click.echo(f"wrote {n} seeds to {seeds_out}")
    flagged = sum(i.status == "flagged" for i in items)
    click.echo(f"wrote {len(items)} items to {out} ({flagged} flagged)")


@main.command("eval")
@click.option("--items", "items_path", type=click.Path(exists=True), required=True)
@click.option("--seeds", "seeds_path", type=click.Path(exists=True), required=True)
@click.option("--baseline", is_flag=True, help="Also print random baselines.")
@click.option("--rng-seed", default=0, show_default=True)
def eval_cmd(items_path, seeds_path, baseline, rng_seed):
    """Run the offline candidate model over items and print the skill report."""
    from .gateway import OfflineGateway
    from .harness import (
        format_report,
        random_mcq_baseline,
        random_native_baseline,
        score_freeform_run,
        score_mcq_run,
        skill_report,
    )
    from .pipeline import read_items

    items = read_items(items_path)
    seeds = {s.seed_id: s for s in sf.read_seeds(seeds_path)}
    gateway = OfflineGateway()
    ff = score_freeform_run(gateway, items, seeds)
    mc = score_mcq_run(gateway, items, seeds)
    click.echo(format_report(skill_report(ff, mc)))
    if baseline:
        b = random_mcq_baseline(items, rng_seed=rng_seed)
        nb = random_native_baseline(items, rng_seed=rng_seed)
        click.echo(
            f"random letter baseline: {b['accuracy']:.3f}±{b['stderr']:.3f} "
            f"(n={b['n']}, macro-F1 {b['macro_f1']:.3f})"
        )
        click.echo(f"random native baseline: {nb['mean_row_score']:.3f} (n={nb['n']})")


@main.command()
@click.option("--items", "items_path", type=click.Path(exists=True), required=True)
@click.option("--seeds", "seeds_path", type=click.Path(exists=True), required=True)
@click.option("--log", "log_path", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def review(items_path, seeds_path, log_path, host, port):
    """Serve the review API for flagged items."""
    import uvicorn

    from .hitl import ReviewStore, create_app

    store = ReviewStore.from_files(items_path, seeds_path, log_path)
    click.echo(f"{len(store.queue())} items awaiting review")
    uvicorn.run(create_app(store), host=host, port=port)


@main.command()
@click.option("--items", "items_path", type=click.Path(exists=True), required=True)
@click.option("--seeds", "seeds_path", type=click.Path(exists=True), required=True)
@click.option("--log", "log_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), required=True)
def export(items_path, seeds_path, log_path, out):
    """Apply the decision log and write the shippable benchmark."""
    from .hitl import ReviewStore

    store = ReviewStore.from_files(items_path, seeds_path, log_path)
    data = store.export_bytes()
    with open(out, "wb") as f:
        f.write(data)
    click.echo(f"exported {len(store.export())} items to {out}")


if __name__ == "__main__":
    sys.exit(main())
