"""Command-line surface: ``simulate``, ``infer``, ``eval``, ``stability``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

import argparse
import csv
import json
import sys

import numpy as np

from . import chainio, rng as rngmod
from .config import build_model_spec, load_config
from .errors import ArgumentError, DataError, NumericalError
from .events import events_to_csv_text, load_events
from .evaluate import edge_posterior, predictive_log_lik, roc_from_scores
from .gibbs import run_chain, sample_state_from_prior
from .model import HawkesParams, ParentAssignment, simulate
from .rng import substream
from .stability import (
    StabilitySpec,
    empirical_eig_distribution,
    max_stable_rho,
    stable_probability,
    theoretical_max_eig,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = _Parser(prog="nethawkes",
                     description="Mutually-exciting point processes with "
                                 "latent network structure")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a model from the prior and "
                                          "simulate an event stream")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True,
                     help="output prefix: writes <out>.csv and <out>.truth.json")
    sim.add_argument("--seed", type=int, default=None)

    inf = sub.add_parser("infer", help="run (or resume) a Gibbs chain")
    inf.add_argument("--config", required=True)
    inf.add_argument("--data", required=True, help="event CSV")
    inf.add_argument("--out", required=True, help="chain file (.jsonl)")
    inf.add_argument("--seed", type=int, default=None)
    inf.add_argument("--iterations", type=int, default=None)
    inf.add_argument("--burn-in", type=int, default=None)
    inf.add_argument("--threads", type=int, default=None)

    ev = sub.add_parser("eval", help="link prediction ROC or held-out "
                                     "bits-per-spike report")
    ev.add_argument("--chain", help="chain file from infer")
    ev.add_argument("--truth", help="truth sidecar JSON (ROC mode)")
    ev.add_argument("--scores", help="CSV score matrix instead of a chain")
    ev.add_argument("--train", help="training event CSV (predictive mode)")
    ev.add_argument("--test", help="held-out event CSV (predictive mode)")
    ev.add_argument("--config", help="config (needed in predictive mode)")
    ev.add_argument("--train-horizon", type=float,
                    help="training window length (predictive mode)")
    ev.add_argument("--test-horizon", type=float,
                    help="held-out window length (predictive mode)")
    ev.add_argument("--burn-in", type=int, default=0)
    ev.add_argument("--out", required=True, help="report prefix")

    st = sub.add_parser("stability", help="theoretical and empirical max "
                                          "eigenvalue summaries")
    st.add_argument("--config", required=True)
    st.add_argument("--out", required=True, help="report prefix")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--threads", type=int, default=1)
    return parser


def cmd_simulate(args):
    cfg = load_config(args.config)
    seed = cfg.inference.seed if args.seed is None else args.seed
    mc = cfg.model
    rng = substream(seed, rngmod.SIMULATE)
    spec = build_model_spec(mc, mc.horizon, rng=rng)
    # the adjacency, weights, and impulse parameters come from the priors;
    # graph hyperparameters and background rates stay at their configured
    # values so the simulated regime is the one the user asked for
    state = sample_state_from_prior(spec, rng, sample_background=False,
                                    sample_graph_hypers=False)
    params = HawkesParams(state.network, state.background, mc.dt_max,
                          mc.horizon)
    seq, parents = simulate(params, rng, event_cap=cfg.inference.event_cap)
    with open(f"{args.out}.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(events_to_csv_text(seq))
    chainio.write_truth_sidecar(f"{args.out}.truth.json", params, parents,
                                state.graph_prior.hypers())
    print(f"simulated {len(seq)} events on {mc.num_processes} processes "
          f"over {mc.horizon}s", file=sys.stderr)
    return 0


def cmd_infer(args):
    cfg = load_config(args.config)
    inf = cfg.inference
    seed = inf.seed if args.seed is None else args.seed
    iterations = inf.iterations if args.iterations is None else args.iterations
    threads = inf.threads if args.threads is None else args.threads
    mc = cfg.model

    seq = load_events(args.data, mc.horizon, mc.num_processes)
    counts = seq.counts_per_process()
    spec = build_model_spec(mc, seq.horizon, train_counts=counts,
                            rng=substream(seed, rngmod.INIT, 1))

    last, done = chainio.read_last_record(args.out)
    start_state = None
    start_iteration = 0
    if last is not None:
        start_iteration = last.iteration + 1
        start_state = _state_from_sample(last, spec, seq)
        print(f"resuming after iteration {last.iteration}", file=sys.stderr)

    every = max(1, iterations // 20)
    mode = "a" if start_iteration else "w"
    with open(args.out, mode, encoding="utf-8") as fh:
        if start_iteration >= iterations:
            print("chain already complete", file=sys.stderr)
            return 0
        for sample in run_chain(seq, spec, iterations, seed, threads=threads,
                                start_state=start_state,
                                start_iteration=start_iteration):
            chainio.append_record(fh, sample)
            if (sample.iteration + 1) % every == 0:
                print(f"iteration {sample.iteration + 1}/{iterations} "
                      f"loglik {sample.loglik:.2f}", file=sys.stderr)
    return 0


def _state_from_sample(sample, spec, seq):
    """Rebuild engine state from a chain record for resumption."""
    from .gibbs import ClusterModel, GibbsState

    prior = spec.graph_prior.copy()
    hyp = sample.graph_hypers
    if prior.kind == "erdos_renyi" and "rho" in hyp:
        prior.rho = hyp["rho"]
    elif prior.kind == "latent_distance" and hyp:
        prior.tau = hyp.get("tau", prior.tau)
        prior.locations = np.array(hyp["locations"])
    elif prior.kind == "sbm" and hyp:
        prior.block_probs = np.array(hyp["block_probs"])
        prior.labels = np.array(hyp["labels"], dtype=np.int64)
        prior.block_weights = np.array(hyp["block_weights"])
    id_model = None
    if sample.process_map is not None:
        id_model = ClusterModel(spec.num_clusters, sample.process_map.copy())
    return GibbsState(sample.network.copy(), sample.background.copy(),
                      ParentAssignment(sample.parents.parent.copy()),
                      prior, sample.weight_scale, id_model)


def _load_scores_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in csv.reader(fh):
            if line:
                rows.append([float(v) for v in line])
    return np.array(rows)


def cmd_eval(args):
    if args.test or args.train:
        return _eval_predictive(args)
    return _eval_roc(args)


def _eval_roc(args):
    if args.truth is None:
        raise ArgumentError("ROC mode needs --truth")
    truth_params, _ = chainio.read_truth_sidecar(args.truth)
    truth = np.asarray(truth_params.network.A)
    report = {"mode": "roc"}
    if args.scores:
        scores = _load_scores_csv(args.scores)
        label = "scores"
    elif args.chain:
        chain = chainio.read_chain(args.chain)
        scores = edge_posterior(chain, args.burn_in)
        label = "edge_posterior"
    else:
        raise ArgumentError("ROC mode needs --chain or --scores")
    exclude_diag = not truth_params.network.allow_self_edges
    roc = roc_from_scores(scores, truth, exclude_diagonal=exclude_diag)
    report[label] = {"auc": roc.auc}
    with open(f"{args.out}.roc.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for th, fp, tp in zip(roc.thresholds, roc.fpr, roc.tpr):
            writer.writerow([repr(float(th)), repr(float(fp)), repr(float(tp))])
    with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"AUC {roc.auc:.4f}", file=sys.stderr)
    return 0


def _eval_predictive(args):
    if not (args.chain and args.train and args.test and args.config
            and args.train_horizon and args.test_horizon):
        raise ArgumentError(
            "predictive mode needs --chain, --train, --test, --config, "
            "--train-horizon, and --test-horizon")
    cfg = load_config(args.config)
    mc = cfg.model
    chain = chainio.read_chain(args.chain)
    train_seq = load_events(args.train, args.train_horizon, mc.num_processes)
    test_seq = load_events(args.test, args.test_horizon, mc.num_processes)
    rep = predictive_log_lik(chain, args.burn_in, test_seq, train_seq,
                             threads=cfg.inference.threads,
                             exact_integrals=mc.exact_integrals)
    report = {
        "mode": "predictive",
        "model_ll": rep.model_ll,
        "baseline_ll": rep.baseline_ll,
        "num_test_events": rep.num_test_events,
        "bits_per_spike": rep.bits_per_spike,
    }
    with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"bits/spike {rep.bits_per_spike:.4f}", file=sys.stderr)
    return 0


def cmd_stability(args):
    cfg = load_config(args.config)
    st = cfg.stability
    rho = st.rho
    if rho == "max_stable":
        rho = max_stable_rho(st.weight_shape, st.weight_rate, st.K,
                             st.confidence_sigmas)
    spec = StabilitySpec(st.K, st.weight_shape, st.weight_rate, float(rho))
    mean, sd, bulk = theoretical_max_eig(spec)
    draws = empirical_eig_distribution(spec, st.draws, seed=args.seed,
                                       threads=args.threads)
    report = {
        "K": st.K,
        "weight_shape": st.weight_shape,
        "weight_rate": st.weight_rate,
        "rho": float(rho),
        "theoretical": {"mean": mean, "sd": sd, "bulk_radius": bulk,
                        "stable_probability": stable_probability(spec)},
        "empirical": {
            "mean": float(draws.mean()),
            "sd": float(draws.std(ddof=1)) if draws.size > 1 else 0.0,
            "fraction_unstable": float((draws >= 1.0).mean()),
            "num_draws": int(draws.size),
        },
    }
    with open(f"{args.out}.draws.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", "max_abs_eig"])
        for i, v in enumerate(draws):
            writer.writerow([i, repr(float(v))])
    with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"empirical mean {report['empirical']['mean']:.4f} "
          f"(theory {mean:.4f})", file=sys.stderr)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "stability": cmd_stability,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
