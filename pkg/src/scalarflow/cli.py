"""Command-line pipeline: scenarios, data, chains, gradient checks, diagnostics.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O failure.
All CSV output uses repr() floats, so reruns with identical inputs are
byte-identical and checkpointed runs resume bitwise.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .adjoint import gradient_potential
from .diagnostics import (
    Histogram1D,
    autocorrelation,
    compute_observable,
    cumulative_relative_error,
    default_edges,
    moments,
    tv_distance,
    write_acf_csv,
    write_hist1d_csv,
    write_hist2d_csv,
    write_moments_csv,
    write_observables_csv,
    write_tv_evolution_csv,
)
from .diagnostics import Histogram2D
from .inference import NoiseModel, ObservationSet, potential
from .samplers import (
    ChainRecord,
    ChainState,
    KernelParams,
    PDETarget,
    initial_chain_state,
    rng_from_json,
    rng_state_to_json,
    run_chain,
)
from .scenarios import ReferencePosterior, build_reference, desk_scale, example1, example2, load_scenario
from .solver import ObservationSpec, SolverConfig, SolverError, forward_map

KERNEL_CHOICES = ("pcn", "independence", "mala", "hmc")


@click.group()
def cli():
    """Estimate a divergence-free background flow from tracer observations."""


@cli.command("scenario")
@click.argument("name", type=str)
@click.option("--level", default="full", show_default=True,
              type=click.Choice(["full", "small", "medium"]))
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_scenario(name, level, seed, out):
    """Write a fully-specified problem setup as JSON."""
    if name == "example1":
        scenario = example1(seed=seed)
    elif name == "example2":
        scenario = example2()
    else:
        raise click.UsageError(f"unknown scenario {name!r}; expected example1 or example2")
    if level != "full":
        scenario = desk_scale(scenario, level)
    scenario.save(out)
    click.echo(f"wrote {out} ({len(scenario.observations)} observations)")


@cli.command("generate-data")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--add-noise/--no-noise", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_generate_data(scenario_path, add_noise, out):
    """Synthesize observations from the scenario's true flow."""
    scenario = load_scenario(scenario_path)
    obs = scenario.synthesize_data(add_noise=add_noise)
    with Path(out).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "x", "y", "value"])
        for t, (x, y), val in zip(obs.spec.times, obs.spec.points, obs.y):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(val))])
    click.echo(f"wrote {out} ({len(obs.y)} values)")


def _load_data_csv(path, spec: ObservationSpec) -> ObservationSet:
    with Path(path).open(newline="") as f:
        reader = csv.reader(f)
        next(reader)
        rows = [[float(v) for v in row] for row in reader]
    arr = np.array(rows)
    if len(arr) != len(spec):
        raise ValueError("data row count does not match scenario observations")
    if not (np.array_equal(arr[:, 0], spec.times)
            and np.array_equal(arr[:, 1:3], spec.points)):
        raise ValueError("data locations do not match scenario observations")
    return ObservationSet(y=arr[:, 3], spec=spec)


def _chain_paths(out_dir: Path, chain: int):
    d = out_dir / f"chain_{chain:02d}"
    return d, d / "trace.csv", d / "checkpoint.json"


def _save_checkpoint(path: Path, step: int, state: ChainState, rng, counters):
    payload = {
        "step": step,
        "v": [repr(float(x)) for x in state.v],
        "phi": repr(float(state.phi)),
        "grad": None if state.grad is None else [repr(float(x)) for x in state.grad],
        "rng": json.loads(rng_state_to_json(rng)),
        "counters": counters.to_json_dict(),
    }
    path.write_text(json.dumps(payload) + "\n")


def _load_checkpoint(path: Path):
    payload = json.loads(path.read_text())
    state = ChainState(
        v=np.array([float(x) for x in payload["v"]]),
        phi=float(payload["phi"]),
        grad=None if payload["grad"] is None
        else np.array([float(x) for x in payload["grad"]]),
    )
    rng = rng_from_json(json.dumps(payload["rng"]))
    return payload["step"], state, rng, payload["counters"]


@cli.command("sample")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kernel", required=True, type=click.Choice(KERNEL_CHOICES))
@click.option("--n-steps", required=True, type=int)
@click.option("--n-chains", default=1, show_default=True, type=int)
@click.option("--beta", default=0.2, show_default=True, type=float)
@click.option("--h", default=0.005, show_default=True, type=float)
@click.option("--epsilon", default=0.1, show_default=True, type=float)
@click.option("--tau", default=1.0, show_default=True, type=float)
@click.option("--seed-base", default=None, type=int,
              help="Per-chain seed is seed-base XOR chain index; defaults to "
                   "the scenario's chain seed.")
@click.option("--data", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Observation CSV (defaults to noiseless synthesis).")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--checkpoint-interval", default=0, show_default=True, type=int,
              help="Steps between checkpoints (0 disables).")
@click.option("--resume", is_flag=True, default=False,
              help="Continue from existing checkpoints in out-dir.")
def cmd_sample(scenario_path, kernel, n_steps, n_chains, beta, h, epsilon, tau,
               seed_base, data, out_dir, checkpoint_interval, resume):
    """Run MCMC chains; checkpointed runs resume bitwise."""
    scenario = load_scenario(scenario_path)
    if n_steps <= 0 or n_chains <= 0:
        raise click.UsageError("n-steps and n-chains must be positive")
    params = KernelParams(beta=beta, h=h, epsilon=epsilon, tau=tau)
    idx = scenario.index_set()
    prior = scenario.prior_measure()
    obs = (_load_data_csv(data, scenario.observations) if data
           else scenario.synthesize_data())
    theta0 = scenario.theta0()
    if seed_base is None:
        seed_base = scenario.seeds["chain_base"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    chain_manifests = []
    for chain in range(n_chains):
        chain_dir, trace_path, ckpt_path = _chain_paths(out, chain)
        chain_dir.mkdir(parents=True, exist_ok=True)
        target = PDETarget(obs, scenario.noise(), theta0, scenario.solver,
                           idx, prior.sigma)
        t0 = time.monotonic()
        if resume and ckpt_path.exists():
            step0, state, rng, saved = _load_checkpoint(ckpt_path)
            target.counters.forward = saved["forward"]
            target.counters.adjoint = saved["adjoint"]
            header_needed = False
        else:
            step0 = 0
            rng = np.random.default_rng(seed_base ^ chain)
            state = initial_chain_state(target, kernel,
                                        prior.sample_components(rng))
            if trace_path.exists():
                trace_path.unlink()
            header_needed = True
        accept_total = 0
        with trace_path.open("a", newline="") as f:
            writer = csv.writer(f)
            if header_needed:
                writer.writerow(["step", "phi", "accept"]
                                + [f"c{i}" for i in range(len(state.v))])
            step = step0
            while step < n_steps:
                chunk = (n_steps - step if checkpoint_interval <= 0
                         else min(checkpoint_interval, n_steps - step))
                rec = run_chain(target, kernel, params, chunk, rng,
                                initial_state=state)
                for i in range(chunk):
                    writer.writerow([step + i, repr(float(rec.phis[i])),
                                     int(rec.accepts[i])]
                                    + [repr(float(x)) for x in rec.samples[i]])
                accept_total += int(rec.accepts.sum())
                state = rec.final_state
                step += chunk
                if checkpoint_interval > 0:
                    f.flush()
                    _save_checkpoint(ckpt_path, step, state, rng,
                                     target.counters)
        chain_manifests.append({
            "chain": chain,
            "seed": seed_base ^ chain,
            "steps": n_steps,
            "resumed_from": step0,
            "acceptance_rate": accept_total / max(1, n_steps - step0),
            "counters": target.counters.to_json_dict(),
            "wall_time_s": time.monotonic() - t0,
        })

    manifest = {
        "scenario": scenario.name,
        "level": scenario.level,
        "kernel": kernel,
        "params": params.to_json_dict(),
        "n_steps": n_steps,
        "n_chains": n_chains,
        "seed_base": seed_base,
        "chains": chain_manifests,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    click.echo(f"wrote {n_chains} chains under {out}")


@cli.command("gradient-check")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", default=20, show_default=True, type=int)
@click.option("--h", default=1e-4, show_default=True, type=float)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--cutoff", default=2.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def cmd_gradient_check(scenario_path, trials, h, tol, cutoff, seed, out):
    """Adjoint gradient vs five-point finite differences of the potential."""
    scenario = load_scenario(scenario_path)
    errors = gradient_check_errors(scenario, trials, h, cutoff, seed)
    if out:
        with Path(out).open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["trial", "rel_err"])
            for i, e in enumerate(errors):
                writer.writerow([i, repr(float(e))])
    worst = float(np.max(errors))
    click.echo(f"max relative error {worst:.3e} over {trials} trials (tol {tol:.1e})")
    if worst > tol:
        raise SolverError(f"gradient check failed: {worst:.3e} > {tol:.1e}")


def gradient_check_errors(scenario, trials: int, h: float, cutoff: float,
                          seed: int) -> np.ndarray:
    """Relative adjoint-vs-FD errors over random (field, direction) pairs."""
    from .fields import build_index_set

    rng = np.random.default_rng(seed)
    idx = build_index_set(cutoff)
    config = SolverConfig(
        scalar_cutoff=scenario.theta0_max_frequency() + int(np.ceil(cutoff)) + 1,
        dt=1e-3,
        kappa=scenario.kappa,
        t_final=scenario.solver.t_final,
    )
    n_obs = min(16, len(scenario.observations))
    spec = ObservationSpec(times=scenario.observations.times[:n_obs],
                           points=scenario.observations.points[:n_obs])
    theta0 = scenario.theta0(config.scalar_cutoff)
    noise = scenario.noise()
    prior = scenario.prior_measure()
    sigma_scale = prior.sigma[2]  # |k| = 1 component scale
    y = forward_map(idx.from_components(
        sigma_scale * rng.standard_normal(idx.component_count)),
        theta0, spec, config, index_set=idx)
    y = y + noise.sigma * rng.standard_normal(len(y))
    obs = ObservationSet(y=y, spec=spec)

    errors = np.empty(trials)
    for i in range(trials):
        v = sigma_scale * rng.standard_normal(idx.component_count)
        d = rng.standard_normal(idx.component_count)
        d /= np.linalg.norm(d)
        res = gradient_potential(idx.from_components(v), y, theta0, spec,
                                 config, idx, noise.sigma)

        def phi_at(vv):
            return potential(idx.from_components(vv), obs, noise, theta0,
                             config, index_set=idx)

        fd = (phi_at(v - 2 * h * d) - 8.0 * phi_at(v - h * d)
              + 8.0 * phi_at(v + h * d) - phi_at(v + 2 * h * d)) / (12.0 * h)
        errors[i] = abs(fd - float(res.gradient @ d)) / max(1.0, abs(fd))
    return errors


@cli.command("reference")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-chains", default=None, type=int)
@click.option("--n-steps", default=None, type=int)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def cmd_reference(scenario_path, n_chains, n_steps, out_dir):
    """Build the pooled reference posterior (frozen histogram edges)."""
    scenario = load_scenario(scenario_path)
    budget = dict(scenario.reference_budget)
    if n_chains is not None:
        budget["n_chains"] = n_chains
    if n_steps is not None:
        budget["n_steps"] = n_steps
    ref = build_reference(scenario, budget)
    ref.save(out_dir)
    click.echo(f"wrote reference ({ref.n_samples} pooled samples) under {out_dir}")


def _read_chain_dir(chains_dir: Path):
    samples, phis = [], []
    for trace in sorted(chains_dir.glob("chain_*/trace.csv")):
        s, p, _ = ChainRecord.read_trace_csv(trace)
        samples.append(s)
        phis.append(p)
    if not samples:
        raise ValueError(f"no chain traces under {chains_dir}")
    return samples, phis


@cli.command("diagnose")
@click.option("--chains-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--reference-dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--components", default="2:10", show_default=True,
              help="Half-open component range lo:hi for marginal diagnostics.")
@click.option("--max-lag", default=100, show_default=True, type=int)
@click.option("--tv-points", default=20, show_default=True, type=int)
@click.option("--pair-components", default=4, show_default=True, type=int,
              help="Leading components for pairwise 2D histograms.")
def cmd_diagnose(chains_dir, reference_dir, out_dir, components, max_lag,
                 tv_points, pair_components):
    """Emit the diagnostics CSV suite for a directory of chains."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples_by_chain, phis_by_chain = _read_chain_dir(Path(chains_dir))
    samples = np.concatenate(samples_by_chain, axis=0)
    phis = np.concatenate(phis_by_chain)

    lo, hi = (int(p) for p in components.split(":"))
    comps = [c for c in range(lo, hi) if c < samples.shape[1]]

    write_acf_csv(out / "acf.csv",
                  autocorrelation(phis, min(max_lag, len(phis) - 1)))
    write_moments_csv(out / "moments.csv", moments(samples))

    reference = ReferencePosterior.load(reference_dir) if reference_dir else None
    for c in comps:
        edges = (reference.edges[c] if reference is not None
                 else default_edges(samples[:, c]))
        hist = Histogram1D(edges)
        hist.accumulate(samples[:, c])
        write_hist1d_csv(out / f"hist1d_{c}.csv", hist)
    for i, ci in enumerate(comps[:pair_components]):
        for cj in comps[i + 1:pair_components]:
            ex = (reference.edges[ci] if reference is not None
                  else default_edges(samples[:, ci]))
            ey = (reference.edges[cj] if reference is not None
                  else default_edges(samples[:, cj]))
            h2 = Histogram2D(ex, ey)
            h2.accumulate(samples[:, ci], samples[:, cj])
            write_hist2d_csv(out / f"hist2d_{ci}_{cj}.csv", h2)

    if reference is not None:
        steps = np.unique(np.linspace(1, len(samples), tv_points).astype(int))
        tv = {c: [] for c in comps}
        for c in comps:
            ref_hist = reference.histograms[c]
            for s in steps:
                hist = Histogram1D(reference.edges[c])
                hist.accumulate(samples[:s, c])
                tv[c].append(tv_distance(hist, ref_hist))
        write_tv_evolution_csv(out / "tv_evolution.csv", steps, tv)

    # per-sample flow enstrophy with its running mean and relative error
    enstrophy = _component_enstrophy(samples)
    truth = (float(np.mean(_component_enstrophy(
        np.stack([reference.moments.mean]))))
        if reference is not None else float(enstrophy.mean()))
    write_observables_csv(out / "observables.csv",
                          np.arange(1, len(enstrophy) + 1), "enstrophy",
                          enstrophy, truth)
    click.echo(f"wrote diagnostics under {out}")


def _component_enstrophy(samples: np.ndarray) -> np.ndarray:
    """(1/2)|curl v|^2 per sample, vectorized over component vectors.

    Works for any sampling cutoff because the component layout is canonical:
    pairs (a, b) in half-lattice order after the two mean entries.
    """
    from .fields import build_index_set

    n_reps = (samples.shape[1] - 2) // 2
    # recover |k|^2 per representative from the canonical ordering
    cutoff = 1.0
    while len(build_index_set(cutoff)) < n_reps:
        cutoff += 1.0
    idx = build_index_set(cutoff)
    k2 = (idx.rep_norm ** 2)[:n_reps]
    a = samples[:, 2::2]
    b = samples[:, 3::2]
    # per representative |v_k|^2 = (a^2 + b^2) / 4, both signs, times 2 pi^2 k^2
    return 2.0 * np.pi**2 * ((a**2 + b**2) * 0.5 * k2).sum(axis=1)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="scalarflow", standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (SolverError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
