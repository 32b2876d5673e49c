# qaoa_rl/commands/experiment_commands.py
import asyncio
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from qaoa_rl.chain import make_disordered, make_uniform, save_instance
from qaoa_rl.commands.core import CommandContext
from qaoa_rl.commands.definition import CommandDefinition, ParameterDefinition
from qaoa_rl.config_loader import AppConfig
from qaoa_rl.flows import create_baseline_flow, create_sweep_flow, create_test_flow, create_train_flow
from qaoa_rl.pocketflow import Flow
from qaoa_rl.types import TrainConfig
from qaoa_rl.utils.artifacts import append_manifest, start_manifest

logger = logging.getLogger(__name__)


def app_defaults(app_config: AppConfig) -> Dict[str, Any]:
    """Flag values supplied by qaoa_rl.conf.yaml when neither the command line nor --config sets them."""
    return {
        "epochs": app_config.training.epochs,
        "episodes": app_config.training.episodes,
        "reward_mode": app_config.training.reward_mode,
        "obs_mode": app_config.training.obs_mode,
        "include_step": app_config.training.include_step,
        "checkpoint_every": app_config.training.checkpoint_every,
        "runs": app_config.evaluation.runs,
        "deterministic": app_config.evaluation.deterministic,
        "backend": app_config.runtime.default_backend,
    }


def _base_shared(ctx: CommandContext) -> Dict[str, Any]:
    return {
        "backend": ctx.parsed_args.get("backend") or "auto",
        "oracle_max_sites": ctx.app_config.runtime.oracle_max_sites,
        "optimizer": ctx.app_config.optimizer,
        "outputs": [],
        "instances": [],
    }


def _train_config(ctx: CommandContext, p: int, seed: int) -> TrainConfig:
    args = ctx.parsed_args
    return TrainConfig(
        p_steps=p,
        n_epochs=args["epochs"],
        n_episodes_per_epoch=args["episodes"],
        master_seed=seed,
        hidden_sizes=ctx.app_config.training.hidden_sizes,
        reward_mode=args["reward_mode"],
        obs_mode=args["obs_mode"],
        include_step=args["include_step"],
        checkpoint_every=args["checkpoint_every"],
    )


async def _run_flow(ctx: CommandContext, flow: Flow, shared: Dict[str, Any], out_dir: Path,
                    master_seed: Optional[int] = None) -> Dict[str, Any]:
    manifest = start_manifest(ctx.command_name, {**ctx.parsed_args, "threads": ctx.threads}, master_seed)
    flow.set_params({"executor": ctx.executor})
    await asyncio.to_thread(flow.run, shared)
    manifest = manifest.model_copy(update={"instances": shared["instances"], "outputs": shared["outputs"]})
    append_manifest(manifest, out_dir)
    return shared


async def cmd_instance(ctx: CommandContext) -> None:
    args = ctx.parsed_args
    if args["uniform"]:
        spec = make_uniform(args["n"], args["j"], args["h"])
    else:
        spec = make_disordered(args["n"], args["h"], args["seed"])
    path = save_instance(spec, args["out"])
    manifest = start_manifest(ctx.command_name, dict(args), None if args["uniform"] else args["seed"])
    append_manifest(manifest.model_copy(update={"outputs": [str(path)]}), path.parent)
    await ctx.output.send_message(
        f"Wrote N={spec.n_sites} {'uniform' if spec.is_uniform else 'disordered'} instance to {path}", style="green"
    )


async def cmd_train(ctx: CommandContext) -> None:
    args = ctx.parsed_args
    out_ckpt = Path(args["out_ckpt"])
    out_log = args["out_log"] or str(out_ckpt.with_suffix(".log.csv"))
    shared = _base_shared(ctx)
    shared.update(
        {
            "instance_path": args["instance"],
            "train_config": _train_config(ctx, args["p"], args["seed"]),
            "checkpoint_path": str(out_ckpt),
            "log_path": out_log,
        }
    )
    await _run_flow(ctx, create_train_flow(), shared, out_ckpt.parent, args["seed"])
    log = shared["training_log"]
    await ctx.output.send_message(f"Checkpoint written to {out_ckpt}; training log {out_log}", style="green")
    if log:
        await ctx.output.send_data([log[-1]], format_hint="table")


def _result_summary(records) -> List[Dict[str, Any]]:
    return [
        {"run_id": r.run_id, "p": r.p, "eps": r.eps, "eps_refined": r.eps_refined, "e_p": r.e_p}
        for r in records
    ]


async def _evaluate_command(ctx: CommandContext, out_csv: str, require_intensive: bool) -> Dict[str, Any]:
    args = ctx.parsed_args
    shared = _base_shared(ctx)
    shared.update(
        {
            "instance_path": args["instance"],
            "checkpoint_path": args["ckpt"],
            "require_intensive": require_intensive,
            "runs": args["runs"],
            "deterministic": args["deterministic"],
            "seed": args["seed"],
            "localopt": args["localopt"],
            "out_csv": out_csv,
            "trace_dir": args.get("trace_dir"),
        }
    )
    await _run_flow(ctx, create_test_flow(), shared, Path(out_csv).parent, args["seed"])
    await ctx.output.send_data(_result_summary(shared["records"]), format_hint="table")
    if shared.get("refine_summary") is not None:
        best = shared["refine_summary"].best
        await ctx.output.send_message(f"Best refined eps {best.eps_final:.6e} at P={best.p}", style="green")
    return shared


async def cmd_test(ctx: CommandContext) -> None:
    await _evaluate_command(ctx, ctx.parsed_args["out_csv"], require_intensive=False)


async def cmd_transfer(ctx: CommandContext) -> None:
    await _evaluate_command(ctx, ctx.parsed_args["out"], require_intensive=True)


async def cmd_sweep(ctx: CommandContext) -> None:
    args = ctx.parsed_args
    shared = _base_shared(ctx)
    shared.update(
        {
            "instance_path": args["instance"],
            "train_config": _train_config(ctx, args["p_list"][0], args["seeds"][0]),
            "p_list": args["p_list"],
            "seeds": args["seeds"],
            "runs": args["runs"],
            "deterministic": args["deterministic"],
            "localopt": args["localopt"],
            "out_csv": args["out"],
        }
    )
    await _run_flow(ctx, create_sweep_flow(), shared, Path(args["out"]).parent)
    await ctx.output.send_data(shared["sweep_rows"], format_hint="table")


async def cmd_baseline(ctx: CommandContext) -> None:
    args = ctx.parsed_args
    shared = _base_shared(ctx)
    shared.update({"instance_path": args["instance"], "p_max": args["p_max"], "out_csv": args["out"]})
    await _run_flow(ctx, create_baseline_flow(), shared, Path(args["out"]).parent)
    summary = [{"p": level.p, "eps": level.eps} for level in shared["baseline"]]
    await ctx.output.send_data(summary, format_hint="table")


def _instance_param(required: bool = True) -> ParameterDefinition:
    return ParameterDefinition(name="instance", description="Instance JSON file.", required=required)


def _backend_param() -> ParameterDefinition:
    return ParameterDefinition(name="backend", description="auto, oracle, fermion or momentum.")


def _training_params() -> List[ParameterDefinition]:
    return [
        ParameterDefinition(name="epochs", param_type=int, description="PPO epochs."),
        ParameterDefinition(name="episodes", param_type=int, description="Episodes per epoch."),
        ParameterDefinition(name="reward_mode", description="raw, normalized or log."),
        ParameterDefinition(name="obs_mode", description="intensive, bare or local."),
        ParameterDefinition(name="include_step", param_type=bool, description="Append t/P to observations."),
        ParameterDefinition(name="checkpoint_every", param_type=int, description="Periodic checkpoint interval (0 = off)."),
    ]


def _evaluation_params(localopt_default: bool) -> List[ParameterDefinition]:
    return [
        ParameterDefinition(name="runs", param_type=int, description="Test episodes."),
        ParameterDefinition(name="deterministic", param_type=bool, description="Use the mean action."),
        ParameterDefinition(name="localopt", param_type=bool, default=localopt_default, description="Refine with BFGS."),
        ParameterDefinition(name="seed", param_type=int, default=0, description="Evaluation seed."),
        ParameterDefinition(name="trace_dir", description="Directory for per-episode JSON-lines traces."),
    ]


def get_experiment_commands() -> List[CommandDefinition]:
    return [
        CommandDefinition(
            name="instance",
            handler=cmd_instance,
            description="Generate a chain instance file.",
            parameters=[
                ParameterDefinition(name="n", param_type=int, required=True, description="Number of sites (even, >= 4)."),
                ParameterDefinition(name="seed", param_type=int, default=0, description="Disorder seed."),
                ParameterDefinition(name="h", param_type=float, default=0.0, description="Target transverse field."),
                ParameterDefinition(name="uniform", param_type=bool, description="All couplings equal to --j."),
                ParameterDefinition(name="j", param_type=float, default=1.0, description="Uniform coupling."),
                ParameterDefinition(name="out", required=True, description="Output JSON path."),
            ],
        ),
        CommandDefinition(
            name="train",
            handler=cmd_train,
            description="Train a PPO policy on one instance.",
            parameters=[
                _instance_param(),
                ParameterDefinition(name="p", param_type=int, required=True, description="Circuit depth P."),
                ParameterDefinition(name="seed", param_type=int, default=0, description="Master seed."),
                _backend_param(),
                ParameterDefinition(name="out_ckpt", required=True, description="Checkpoint JSON path."),
                ParameterDefinition(name="out_log", description="Training log CSV path."),
                *_training_params(),
            ],
        ),
        CommandDefinition(
            name="test",
            handler=cmd_test,
            description="Evaluate a checkpoint on an instance.",
            parameters=[
                ParameterDefinition(name="ckpt", required=True, description="Checkpoint JSON path."),
                _instance_param(),
                _backend_param(),
                ParameterDefinition(name="out_csv", required=True, description="Result CSV path."),
                *_evaluation_params(localopt_default=False),
            ],
        ),
        CommandDefinition(
            name="transfer",
            handler=cmd_transfer,
            description="Evaluate a small-chain policy on a larger instance.",
            parameters=[
                ParameterDefinition(name="ckpt", required=True, description="Checkpoint trained on the small chain."),
                _instance_param(),
                _backend_param(),
                ParameterDefinition(name="out", required=True, description="Result CSV path."),
                *_evaluation_params(localopt_default=True),
            ],
        ),
        CommandDefinition(
            name="sweep",
            handler=cmd_sweep,
            description="Train and test one policy per (P, seed); aggregate eps versus P.",
            parameters=[
                _instance_param(),
                ParameterDefinition(name="p_list", param_type=List[int], required=True, description="Depths, e.g. 1,2,3."),
                ParameterDefinition(name="seeds", param_type=List[int], default=[0], description="Master seeds."),
                _backend_param(),
                ParameterDefinition(name="out", required=True, description="Summary CSV path."),
                ParameterDefinition(name="runs", param_type=int, description="Test episodes per policy."),
                ParameterDefinition(name="deterministic", param_type=bool, description="Use the mean action."),
                ParameterDefinition(name="localopt", param_type=bool, default=False, description="Refine with BFGS."),
                *_training_params(),
            ],
        ),
        CommandDefinition(
            name="baseline",
            handler=cmd_baseline,
            description="Iterative smooth schedules up to --p-max.",
            parameters=[
                _instance_param(),
                ParameterDefinition(name="p_max", param_type=int, required=True, description="Largest depth."),
                _backend_param(),
                ParameterDefinition(name="out", required=True, description="Baseline CSV path."),
            ],
        ),
    ]
