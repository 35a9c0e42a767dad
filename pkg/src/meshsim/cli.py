"""Command-line entry point: ``meshsim <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 domain error,
4 runtime divergence.  Outputs are staged and moved into the output
directory only once a command has fully succeeded.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import __version__
from . import engine, forecast, powerctl, propagation, sustain
from .config import RunConfig, default_config, load_config
from .errors import (ConfigError, ConfigMismatch, CoverageUnmet, DivergenceDetected,
                     DomainError, InvalidScenario, MeshSimError, UntrainedPolicy)
from .traffic import generate_demand, with_seed

OUT_ENV = "MESHSIM_OUT"
DEFAULT_OUT = "meshsim_out"

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_DIVERGENCE = 0, 2, 3, 4


class Outputs:
    """Collects artifact texts; writes them (plus a manifest) all at once."""

    def __init__(self, command: str):
        self.command = command
        self.files: dict[str, str] = {}
        self.meta: list[tuple[str, str]] = []

    def add(self, name: str, text: str):
        self.files[name] = text

    def note(self, key: str, value):
        self.meta.append((key, str(value)))

    def manifest(self) -> str:
        lines = ["tool=meshsim", f"version={__version__}", f"command={self.command}"]
        lines += [f"{k}={v}" for k, v in self.meta]
        for name in sorted(self.files):
            digest = hashlib.sha256(self.files[name].encode()).hexdigest()
            lines.append(f"file={name} sha256={digest}")
        return "\n".join(lines) + "\n"

    def commit(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".meshsim-", dir=out_dir))
        try:
            payload = dict(self.files, manifest=self.manifest())
            for name, text in payload.items():
                with open(stage / name, "w", newline="\n") as fh:
                    fh.write(text)
            for name in payload:
                os.replace(stage / name, out_dir / name)
        finally:
            shutil.rmtree(stage, ignore_errors=True)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _config(args) -> RunConfig:
    return load_config(args.config) if args.config else default_config()


def _note_config(out: Outputs, cfg: RunConfig):
    out.note("config_sha256", cfg.sha256)
    out.note("effective_sha256", hashlib.sha256(cfg.effective().encode()).hexdigest())


def _forecaster_for(cfg: RunConfig, *archs) -> forecast.LstmModel | None:
    if not any(a.forecaster for a in archs):
        return None
    model, _ = engine.train_traffic_forecaster(with_seed(cfg.traffic, 0), cfg.forecast)
    return model


# --- subcommands ------------------------------------------------------------

def cmd_pathloss(args) -> int:
    if args.model == "cost231":
        missing = [n for n in ("f", "hbs", "hms", "d") if getattr(args, n) is None]
        if missing:
            raise ConfigError("pathloss: cost231 needs " + ", ".join("--" + m for m in missing))
        env = propagation.Environment.parse(args.env)
        pl = propagation.cost231(args.f, args.hbs, args.hms, args.d, env)
        print("model,f_mhz,h_bs_m,h_ms_m,d_km,environment,path_loss_db")
        print(f"cost231,{args.f!r},{args.hbs!r},{args.hms!r},{args.d!r},{env.value},{pl!r}")
    else:
        missing = [n for n in ("f", "d") if getattr(args, n) is None]
        if missing:
            raise ConfigError("pathloss: fspl needs " + ", ".join("--" + m for m in missing))
        pl = propagation.fspl(args.d, args.f)
        print("model,f_mhz,d_m,path_loss_db")
        print(f"fspl,{args.f!r},{args.d!r},{pl!r}")
    print(f"{pl:.2f} dB")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    arch = cfg.arch(args.arch)
    seed = cfg.seed if args.seed is None else args.seed
    series = generate_demand(with_seed(cfg.traffic, seed))
    policy_text = Path(args.policy).read_text() if args.policy else None
    rep = engine.run_simulation(arch, series, seed, forecaster=_forecaster_for(cfg, arch),
                                policy_text=policy_text, reward_cfg=cfg.reward)
    out = Outputs("run")
    _note_config(out, cfg)
    out.note("architecture", arch.name)
    out.note("seeds", seed)
    out.note("time_scale", repr(cfg.traffic.time_scale))
    if policy_text is not None:
        out.note("policy_sha256", hashlib.sha256(policy_text.encode()).hexdigest())
    out.add("sim.csv", rep.to_csv())
    out.add("summary.txt", rep.summary() + f"time_scale={cfg.traffic.time_scale!r}\n")
    out.commit(_out_dir(args))
    sys.stdout.write(rep.summary())
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    seeds = tuple(range(args.seeds)) if args.seeds is not None else cfg.seeds
    workers = args.workers or cfg.workers
    model = _forecaster_for(cfg, cfg.macro, cfg.mesh)
    kw = {"forecaster": model} if model is not None else {}
    rep = engine.compare_architectures(cfg.macro, cfg.mesh, cfg.traffic, seeds, workers=workers,
                                       macro_kw=kw, mesh_kw=kw, check_coverage=cfg.check_coverage)
    out = Outputs("compare")
    _note_config(out, cfg)
    out.note("seeds", ",".join(map(str, seeds)))
    out.note("time_scale", repr(cfg.traffic.time_scale))
    out.add("comparison.csv", rep.to_csv())
    out.add("per_seed.csv", rep.per_seed_csv())
    out.add("load_curve.csv", rep.load_curve_csv())
    out.commit(_out_dir(args))
    sys.stdout.write(rep.to_csv())
    return EXIT_OK


def cmd_sustain(args) -> int:
    out = Outputs("sustain")
    if args.config:
        text = Path(args.config).read_text() if Path(args.config).exists() else None
        if text is None:
            raise ConfigError(f"{args.config}: config file not found")
        source = Path(args.config).name
    else:
        source = args.preset
        try:
            text = sustain._preset_text(args.preset)
        except FileNotFoundError:
            raise ConfigError(f"sustain: unknown preset {args.preset!r}") from None
    out.note("source", source)
    out.note("config_sha256", hashlib.sha256(text.encode()).hexdigest())
    try:
        if "[opex]" in text:
            ledger, capex = sustain.ledger_from_text(text)
            rep = sustain.opex_report(ledger)
            cx = sustain.capex_compare(*capex)
            body = rep.to_text() + f"capex_reduction_pct={float(cx)!r} (display {sustain.round_to(cx, 1)}%)\n"
            out.add("opex.csv", rep.to_csv())
            out.add("capex.csv", "metric,traditional_musd,proposed_musd,reduction_pct\n"
                    f"capex,{float(capex[0])!r},{float(capex[1])!r},{float(cx)!r}\n")
            out.add("opex.txt", body)
        else:
            rep = sustain.event_report(sustain.event_scenario_from_text(text))
            body = rep.to_text()
            out.add("event.csv", rep.to_csv())
            out.add("event.txt", body)
    except KeyError as exc:
        raise ConfigError(f"{source}: missing section or key {exc}") from None
    out.commit(_out_dir(args))
    sys.stdout.write(body)
    return EXIT_OK


def cmd_train_forecast(args) -> int:
    cfg = _config(args)
    fcfg = cfg.forecast
    model, curve = engine.train_traffic_forecaster(with_seed(cfg.traffic, 0), fcfg)
    out = Outputs("train-forecast")
    _note_config(out, cfg)
    out.note("seeds", fcfg.seed)
    out.add("forecaster.txt", model.to_text())
    out.add("loss_curve.csv", curve.to_csv())
    out.commit(_out_dir(args))
    print(f"final_mse={curve.mse[-1]!r}")
    return EXIT_OK


def cmd_train_policy(args) -> int:
    cfg = _config(args)
    arch = cfg.arch(args.arch)
    seed = cfg.seed if args.seed is None else args.seed
    topo = engine.build_topology(arch, seed)
    env = engine._rl_env(arch, topo, cfg.reward)
    q, curve = powerctl.train_policy(env, cfg.train, seed)
    out = Outputs("train-policy")
    _note_config(out, cfg)
    out.note("architecture", arch.name)
    out.note("seeds", seed)
    out.add("policy.txt", powerctl.save_policy(q))
    out.add("learning_curve.csv", curve.to_csv())
    out.commit(_out_dir(args))
    print(f"episodes={len(curve.returns)} final_return={curve.returns[-1]!r}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshsim", description="Macro vs adaptive-mesh network simulator.")
    p.add_argument("--version", action="version", version=f"meshsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    sp = sub.add_parser("pathloss", help="evaluate a path-loss model")
    sp.add_argument("--model", choices=("cost231", "fspl"), default="cost231")
    sp.add_argument("--f", type=float, help="carrier frequency, MHz")
    sp.add_argument("--hbs", type=float, help="base-station height, m (cost231)")
    sp.add_argument("--hms", type=float, help="mobile height, m (cost231)")
    sp.add_argument("--d", type=float, help="distance: km for cost231, m for fspl")
    sp.add_argument("--env", default="metro", help="medium | metro (cost231)")
    sp.set_defaults(func=cmd_pathloss)

    sp = sub.add_parser("run", help="simulate one architecture")
    sp.add_argument("--config", help="scenario config file (defaults to the desk scenario)")
    sp.add_argument("--arch", choices=("mesh", "macro"), help="overrides [run] architecture")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--policy", help="trained policy file for power_policy = rl")
    outputs(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="matched-coverage macro vs mesh comparison")
    sp.add_argument("--config")
    sp.add_argument("--seeds", type=int, help="number of seeds (0..N-1); overrides [run] seeds")
    sp.add_argument("--workers", type=int)
    outputs(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sustain", help="fuel, CO2 and cost arithmetic")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--preset", default="hajj_5day", help="hajj_5day | annual_fleet | opex")
    g.add_argument("--config", help="custom event or cost ledger file")
    outputs(sp)
    sp.set_defaults(func=cmd_sustain)

    sp = sub.add_parser("train-forecast", help="train the traffic LSTM")
    sp.add_argument("--config")
    outputs(sp)
    sp.set_defaults(func=cmd_train_forecast)

    sp = sub.add_parser("train-policy", help="train a power-control policy for one topology")
    sp.add_argument("--config")
    sp.add_argument("--arch", choices=("mesh", "macro"))
    sp.add_argument("--seed", type=int)
    outputs(sp)
    sp.set_defaults(func=cmd_train_policy)
    return p


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, DivergenceDetected):
        return EXIT_DIVERGENCE
    if isinstance(exc, (ConfigError, ConfigMismatch, UntrainedPolicy, InvalidScenario,
                        FileNotFoundError)):
        return EXIT_CONFIG
    if isinstance(exc, (DomainError, CoverageUnmet, MeshSimError, ValueError)):
        return EXIT_DOMAIN
    raise exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MeshSimError, ValueError, FileNotFoundError) as exc:
        code = exit_code(exc)
        print(f"meshsim {args.command}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
