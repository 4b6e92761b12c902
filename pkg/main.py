from pathlib import Path
from typing import Optional
import logging

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from back_end.classe import controller
from back_end.classe import faber_schauder as fs
from back_end.classe.env_core import make_env
from back_end.classe.fractal_opt import multistart_min
from back_end.classe.life_codec import LifeValue
from back_end.classe.plotting import (
    plot_cumulative_reward,
    plot_score_curves,
    plot_trajectories,
    total_variation,
)
from back_end.classe.policy_life import build_system, read_policy_csv, solve, write_life_csv
from back_end.classe.poly_approx import PolyRep, fit_poly, poly_min
from back_end.classe.rollout import TruncatedEvaluator, sample_score_curve
from back_end.classe.transform import fit_params
from back_end.classe.verification import run_verification
from back_end.utils.exceptions import EXIT_CONFIG_ERROR, EXIT_VERIFICATION_FAILURE, ConfigError, ScoreLifeError
from back_end.utils.export import read_json, write_config_echo, write_frame, write_json
from back_end.utils.monitoring import PerformanceMonitor, setup_logging, start_run
from modeles.experiment import ExperimentConfig


app = typer.Typer(
    name="scorelife",
    help="Programmation Score-life: encodage des séquences d'actions, représentations et contrôle.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()
logger = logging.getLogger("scorelife")

# Options communes
CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Fichier `key = value`")
ENV_OPTION = typer.Option(None, "--env", help="cartpole | cycle | constant | two_state")
COST_OPTION = typer.Option(None, "--cost", help="quadratic | reward")
GAMMA_OPTION = typer.Option(None, "--gamma", help="Facteur d'actualisation")
STATE_OPTION = typer.Option(None, "--state", help="État initial, valeurs séparées par des virgules")
SEED_OPTION = typer.Option(None, "--seed")
OUT_DIR_OPTION = typer.Option(None, "--out-dir", help="Répertoire de sortie")


def _resolve(config_path, **overrides):
    """Config file + flags -> ExperimentConfig, logging, run id and config echo."""
    config = ExperimentConfig.build(config_path, **overrides)
    setup_logging()
    run_id = start_run()
    logger.info(f"Exécution {run_id}: {config.model_dump()}")
    write_config_echo(config, config.out_dir)
    return config


def _fail(error, code):
    logger.error(str(error))
    console.print(f"❌ {error}")
    raise typer.Exit(code=code)


def _guard(func):
    """Map project exceptions to exit codes."""
    try:
        return func()
    except ScoreLifeError as e:
        _fail(e, e.exit_code)
    except OSError as e:
        _fail(f"Écriture impossible: {e}", EXIT_CONFIG_ERROR)


def _initial_state(config, env):
    if config.state:
        values = config.state
        return env.as_state(values if config.env == "cartpole" else int(values[0]))
    return env.as_state(np.zeros(4) if config.env == "cartpole" else 0)


def _out(config, name):
    return Path(config.out_dir) / name


def _load_rep(path):
    data = read_json(path)
    if "alpha0" in data:
        return fs.FSRep.from_json(data)
    if "coeffs" in data:
        return PolyRep.from_json(data)
    raise ConfigError(f"Représentation non reconnue dans {path}")


@app.command("plot-slf")
def plot_slf(
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    gammas: Optional[str] = typer.Option(None, "--gammas", help="Balayage, ex. 0.5,0.6,0.7,0.8"),
    state: Optional[str] = STATE_OPTION,
    depth: Optional[int] = typer.Option(None, "--depth"),
    samples: Optional[int] = typer.Option(None, "--samples"),
    sample_mode: Optional[str] = typer.Option(None, "--sample-mode", help="uniform | dyadic"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    overlay_degree: Optional[int] = typer.Option(None, "--overlay-degree"),
    seed: Optional[int] = SEED_OPTION,
    out_dir: Optional[str] = OUT_DIR_OPTION,
    svg: bool = typer.Option(True, "--svg/--no-svg"),
):
    """Échantillonne S(., x) pour un ou plusieurs gamma (CSV l,S et SVG)."""

    def run():
        config = _resolve(
            config_path, env=env, cost=cost, gamma=gamma, gammas=gammas, state=state, depth=depth,
            samples=samples, sample_mode=sample_mode, horizon=horizon, overlay_degree=overlay_degree,
            seed=seed, out_dir=out_dir,
        )
        curves, overlays = {}, {}
        table = Table("gamma", "échantillons", "variation totale", "min S")
        for g in config.gamma_list():
            model = make_env(config.env, g, config.cost, config.n_states)
            evaluator = TruncatedEvaluator(model, config.horizon, config.tail_tol)
            x = _initial_state(config, model)
            frame = sample_score_curve(evaluator, x, config.samples, config.seed, config.sample_mode, config.depth)
            write_frame(frame, _out(config, f"slf_gamma_{g:g}.csv"))
            label = f"gamma={g:g}"
            curves[label] = frame
            if config.overlay_degree:
                overlays[label] = fit_poly(evaluator, x, config.overlay_degree, config.n_samples, config.seed)
            table.add_row(f"{g:g}", str(len(frame)), f"{total_variation(frame['S']):.4f}", f"{frame['S'].min():.6f}")
        if svg:
            plot_score_curves(curves, _out(config, "slf.svg"), overlays)
        console.print(table)
        console.print("✅ Courbes Score-life écrites")

    _guard(run)


@app.command("fit-fs")
def fit_fs(
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    state: Optional[str] = STATE_OPTION,
    order: Optional[int] = typer.Option(None, "--order"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    eta: Optional[float] = typer.Option(None, "--eta"),
    delta: Optional[float] = typer.Option(None, "--delta"),
    restarts: Optional[int] = typer.Option(None, "--restarts"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters"),
    seed: Optional[int] = SEED_OPTION,
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Représentation de Faber-Schauder (JSON) et son minimum (CSV)."""

    def run():
        config = _resolve(
            config_path, env=env, cost=cost, gamma=gamma, state=state, order=order, horizon=horizon,
            eta=eta, delta=delta, restarts=restarts, max_iters=max_iters, seed=seed, out_dir=out_dir,
        )
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        evaluator = TruncatedEvaluator(model, config.horizon, config.tail_tol)
        x = _initial_state(config, model)
        rep = fs.fit(evaluator, x, config.order)
        write_json(rep.to_json(), _out(config, "fs_rep.json"))
        best = multistart_min(rep, config.optimizer())
        row = best.to_row()
        row["l_star_digits"] = LifeValue.from_float(best.l_star, model.M, config.prefix).to_digit_string()
        write_frame(pd.DataFrame([row]), _out(config, "fs_min.csv"))
        console.print(f"✅ {rep.n_coefficients} coefficients, l*={best.l_star:.6f}, S={best.value:.6g} ({best.stop_reason.value})")

    _guard(run)


@app.command("fit-poly")
def fit_poly_command(
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    state: Optional[str] = STATE_OPTION,
    degree: Optional[int] = typer.Option(None, "--degree"),
    n_samples: Optional[int] = typer.Option(None, "--samples"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    seed: Optional[int] = SEED_OPTION,
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Approximation polynomiale (JSON) et son minimum."""

    def run():
        config = _resolve(
            config_path, env=env, cost=cost, gamma=gamma, state=state, degree=degree,
            n_samples=n_samples, horizon=horizon, seed=seed, out_dir=out_dir,
        )
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        evaluator = TruncatedEvaluator(model, config.horizon, config.tail_tol)
        rep = fit_poly(evaluator, _initial_state(config, model), config.degree, config.n_samples, config.seed)
        l_star, value = poly_min(rep)
        data = rep.to_json()
        data["min_value"] = value
        write_json(data, _out(config, "poly_rep.json"))
        console.print(f"✅ degré {rep.degree}, rms={rep.rms:.3e}, min S_poly={value:.6g} (l={l_star:.4f})")

    _guard(run)


@app.command("fit-transform")
def fit_transform(
    base: Path = typer.Option(..., "--base", help="Représentation JSON de S(., x0)"),
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    state: Optional[str] = STATE_OPTION,
    n_samples: Optional[int] = typer.Option(None, "--samples"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    seed: Optional[int] = SEED_OPTION,
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Ajuste (phi, psi, N) entre une représentation de base et l'état --state."""

    def run():
        config = _resolve(
            config_path, base=str(base), env=env, cost=cost, gamma=gamma, state=state,
            n_samples=n_samples, horizon=horizon, seed=seed, out_dir=out_dir,
        )
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        base_rep = _load_rep(config.base)
        target = TruncatedEvaluator(model, config.horizon, config.tail_tol).at(_initial_state(config, model))
        result = fit_params(
            base_rep, target, n_samples=config.n_samples, seed=config.seed,
            gamma=model.gamma, M=model.M, g_max=model.g_max,
        )
        write_json(result.to_json(), _out(config, "transform.json"))
        p = result.params
        status = "✅" if result.reliable else "⚠️"
        console.print(f"{status} phi={p.phi_value:.6f}, psi={p.psi:.6g}, N={p.N}, résidu={result.residual:.3e}")

    _guard(run)


@app.command("policy-life")
def policy_life(
    policy: Path = typer.Option(..., "--policy", help="CSV state_index,action_code"),
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Valeurs de vie d'une politique stationnaire (environnement fini)."""

    def run():
        config = _resolve(config_path, policy=str(policy), env=env, gamma=gamma, out_dir=out_dir)
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        if not Path(config.policy).exists():
            raise ConfigError(f"Politique introuvable: {config.policy}")
        system = build_system(model, read_policy_csv(config.policy))
        solve(system)
        write_life_csv(system, _out(config, config.out or "life_values.csv"))
        flagged = int(system.boundary.sum())
        console.print(f"✅ {system.n_states} valeurs de vie" + (f", {flagged} au bord l=1" if flagged else ""))

    _guard(run)


@app.command("control")
def control(
    config_path: Optional[Path] = CONFIG_OPTION,
    method: Optional[str] = typer.Option(None, "--method", help="exact | approx"),
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    state: Optional[str] = STATE_OPTION,
    seeds: Optional[int] = typer.Option(None, "--seeds", help="Nombre d'épisodes"),
    seed: Optional[int] = SEED_OPTION,
    order: Optional[int] = typer.Option(None, "--order"),
    degree: Optional[int] = typer.Option(None, "--degree"),
    n_samples: Optional[int] = typer.Option(None, "--samples"),
    prefix: Optional[int] = typer.Option(None, "--prefix"),
    episode_cap: Optional[int] = typer.Option(None, "--episode-cap"),
    use_transform: Optional[bool] = typer.Option(None, "--use-transform/--no-transform"),
    out: Optional[str] = typer.Option(None, "--out", help="Nom du CSV de résultats"),
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Épisodes en boucle fermée (méthode exacte ou approchée)."""

    def run():
        config = _resolve(
            config_path, method=method, env=env, cost=cost, gamma=gamma, state=state, seeds=seeds,
            seed=seed, order=order, degree=degree, n_samples=n_samples, prefix=prefix,
            episode_cap=episode_cap, use_transform=use_transform, out=out, out_dir=out_dir,
        )
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        x0 = _initial_state(config, model) if config.state is not None else None
        seed_list = list(range(config.seed, config.seed + config.seeds))
        episodes = controller.run_episodes(model, config.method, seed_list, _settings(config), x0)
        frame = pd.concat([e.to_frame() for e in episodes], ignore_index=True)
        write_frame(frame, _out(config, config.out or "results.csv"))
        summary = pd.DataFrame([e.summary() for e in episodes])
        write_frame(summary, _out(config, "summary.csv"))
        if config.env == "cartpole":
            trajectories = {f"seed {e.seed}": e.trajectory.to_frame(model.state_labels) for e in episodes}
            plot_trajectories(trajectories, _out(config, f"trajectories_{config.method}.svg"))
        _print_summary(summary)

    _guard(run)


@app.command("compare")
def compare(
    config_path: Optional[Path] = CONFIG_OPTION,
    env: Optional[str] = ENV_OPTION,
    cost: Optional[str] = COST_OPTION,
    gamma: Optional[float] = GAMMA_OPTION,
    seeds: Optional[int] = typer.Option(None, "--seeds"),
    seed: Optional[int] = SEED_OPTION,
    sweep: bool = typer.Option(False, "--sweep", help="Méthode exacte sur gamma {0.5, 0.8} x {quadratic, reward}"),
    out_dir: Optional[str] = OUT_DIR_OPTION,
):
    """Compare les méthodes exacte et approchée sur les mêmes graines."""

    def run():
        config = _resolve(config_path, env=env, cost=cost, gamma=gamma, seeds=seeds, seed=seed, out_dir=out_dir)
        model = make_env(config.env, config.gamma, config.cost, config.n_states)
        seed_list = list(range(config.seed, config.seed + config.seeds))
        frame, summary = controller.compare_methods(model, seed_list, _settings(config))
        write_frame(frame, _out(config, "compare.csv"))
        write_frame(summary, _out(config, "compare_summary.csv"))
        plot_cumulative_reward(frame, _out(config, "cumulative_reward.svg"))
        _print_summary(summary)
        if sweep:
            table = controller.sweep_exact(seed_list, settings=_settings(config))
            write_frame(table, _out(config, "exact_sweep.csv"))
            _print_summary(table)

    _guard(run)


@app.command("verify")
def verify(
    seed: int = typer.Option(0, "--seed"),
    qualitative: bool = typer.Option(False, "--qualitative"),
    out_dir: Optional[str] = OUT_DIR_OPTION,
    config_path: Optional[Path] = CONFIG_OPTION,
):
    """Suite de propriétés (rapport JSON, code 4 en cas d'échec)."""

    def run():
        config = _resolve(config_path, seed=seed, qualitative=qualitative, out_dir=out_dir)
        report = run_verification(config.seed, config.qualitative)
        write_json(report.model_dump(), _out(config, "verification.json"))
        table = Table("propriété", "statut", "mesuré", "borne")
        for entry in report.entries:
            table.add_row(
                entry.name,
                "✅" if entry.passed else "❌",
                "" if entry.measured is None else f"{entry.measured:.3e}",
                "" if entry.bound is None else f"{entry.bound:.3e}",
            )
        console.print(table)
        logger.info(f"Métriques: {PerformanceMonitor.get_metrics()}")
        if not report.success:
            raise typer.Exit(code=EXIT_VERIFICATION_FAILURE)

    _guard(run)


def _settings(config):
    return {
        "order": config.order,
        "opt_cfg": config.optimizer(),
        "prefix": config.prefix,
        "episode_cap": config.episode_cap,
        "horizon": config.horizon,
        "degree": config.degree,
        "n_samples": config.n_samples,
        "use_transform": config.use_transform,
    }


def _print_summary(summary):
    table = Table(*[str(c) for c in summary.columns])
    for row in summary.itertuples(index=False):
        table.add_row(*[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)


if __name__ == "__main__":
    app()
