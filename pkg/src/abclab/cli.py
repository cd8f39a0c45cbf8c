"""Command-line entry point ``abc-lab``.

Subcommands::

    abc-lab run CONFIG                 run one sampler from a key = value file
    abc-lab oracle NAME [k=v ...]      tabulate a reference function as CSV
    abc-lab summarize SEQFILE          pi0, S, D, H0 of a sequence table as CSV
    abc-lab replicate STUDY [--scale s] [--seed k]
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import oracles
from .coalescent import read_seq_table, summarize_seqs
from .exceptions import AbcError, CatalogError
from .harness import parse_config, run_experiment, write_report_csv
from .models import GandKParams, gk_quantile
from .studies import STUDIES, run_study


def _grid(spec, default):
    lo, hi, n = (spec or default).split(":")
    return np.linspace(float(lo), float(hi), int(n))


def _table(columns, rows):
    lines = [",".join(columns)]
    for row in zip(*rows):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _opt(params, key, default=None, cast=float):
    if key in params:
        return cast(params[key])
    if default is None:
        raise AbcError(f"missing oracle parameter {key!r}")
    return default


def _oracle_expgamma_likelihood(p):
    y, h = _opt(p, "y", 2.0), _opt(p, "h", 0.91)
    th = _grid(p.get("grid"), "0.01:5:200")
    return _table(["theta", "p_abc", "p", "bias2"],
                  [th, oracles.expgamma_abc_likelihood(y, th, h),
                   oracles.expgamma_abc_likelihood(y, th, 0.0), oracles.expgamma_bias2(y, th, h)])


def _oracle_expgamma_posterior(p):
    y, a, b = _opt(p, "y", 2.0), _opt(p, "alpha", 1.2), _opt(p, "beta", 1.2)
    th = _grid(p.get("grid"), "0.01:5:200")
    hs = [float(v) for v in p.get("h", "0,0.91,1.8,2.7").split(",")]
    cols = [th] + [oracles.expgamma_abc_posterior(th, y, a, b, h) for h in hs]
    return _table(["theta"] + [f"h={h:g}" for h in hs], cols)


def _oracle_expgamma_bias(p):
    y, a, b, h = _opt(p, "y", 2.0), _opt(p, "alpha", 1.2), _opt(p, "beta", 1.2), _opt(p, "h", 0.91)
    th = _grid(p.get("grid"), "0.01:5:200")
    exact, second = oracles.expgamma_posterior_bias(th, y, a, b, h)
    return _table(["theta", "a_exact", "a_second_order"], [th, exact, second])


def _oracle_gaussian_posterior(p):
    s0 = p.get("s0")
    args = dict(ybar=_opt(p, "ybar", 0.0), sigma0=_opt(p, "sigma0", 1.0), n=_opt(p, "n", 1.0),
                m0=_opt(p, "m0", 0.0), s0=None if s0 in (None, "inf") else float(s0),
                omega=_opt(p, "omega", 1.0))
    th = _grid(p.get("grid"), "-4:4:201")
    hs = [float(v) for v in p.get("h", "0,0.1,0.5,1").split(",")]
    cols = [th] + [oracles.gaussian_abc_posterior(th, h=h, **args) for h in hs]
    return _table(["theta"] + [f"h={h:g}" for h in hs], cols)


def _oracle_binomial_match(p):
    scheme = p.get("scheme", "s3")
    s_obs = [int(v) for v in p.get("s_obs", "3").split(",")]
    prob = oracles.binomial_match_prob(scheme, s_obs, int(_opt(p, "n", 5)))
    return f"scheme,s_obs,fraction,probability\n{scheme},{' '.join(map(str, s_obs))},{prob},{float(prob)!r}\n"


def _oracle_count_mixture(p):
    n_obs, c, lam_max = int(_opt(p, "n_obs", 112)), _opt(p, "c", 2.0), _opt(p, "lam_max", 100.0)
    lam = _grid(p.get("grid"), "20:100:161")
    hs = [float(v) for v in p.get("h", "0,10,20").split(",")]
    cols = [lam] + [oracles.DiscreteMixture(n_obs, h, c, lam_max).pdf(lam) for h in hs]
    return _table(["lambda"] + [f"h={h:g}" for h in hs], cols)


def _oracle_gk_quantile(p):
    params = GandKParams(_opt(p, "A", 3.0), _opt(p, "B", 1.0), _opt(p, "g", 2.0), _opt(p, "k", 0.5))
    q = _grid(p.get("grid"), "0.001:0.999:199")
    return _table(["q", "quantile"], [q, gk_quantile(q, params)])


ORACLES = {
    "expgamma-likelihood": _oracle_expgamma_likelihood,
    "expgamma-posterior": _oracle_expgamma_posterior,
    "expgamma-bias": _oracle_expgamma_bias,
    "gaussian-posterior": _oracle_gaussian_posterior,
    "binomial-match": _oracle_binomial_match,
    "count-mixture": _oracle_count_mixture,
    "gk-quantile": _oracle_gk_quantile,
}


def _parse_params(items):
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise AbcError(f"oracle parameters are key=value, got {item!r}")
        params[key.strip()] = val.strip()
    return params


def build_parser():
    parser = argparse.ArgumentParser(prog="abc-lab", description="Rejection ABC toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sampler described by a config file")
    run.add_argument("config")

    orc = sub.add_parser("oracle", help="tabulate a reference function as CSV")
    orc.add_argument("name", choices=sorted(ORACLES))
    orc.add_argument("params", nargs="*", metavar="key=value",
                     help="parameters, plus grid=lo:hi:n for the evaluation grid")

    summ = sub.add_parser("summarize", help="summary statistics of a 'count : bits' table")
    summ.add_argument("seqfile")

    rep = sub.add_parser("replicate", help="run a named built-in study")
    rep.add_argument("study", choices=sorted(STUDIES))
    rep.add_argument("--scale", type=float, default=1.0, help="sample-size multiplier")
    rep.add_argument("--seed", type=int, default=1)
    rep.add_argument("--output", help="write the CSV here instead of stdout")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "run":
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            report = run_experiment(cfg)
            if cfg.output:
                print(f"wrote {report.sample.N} draws to {cfg.output} "
                      f"(h_final={report.sample.h_final:.6g}, "
                      f"sims/particle={report.sims_per_particle:.3f})", file=out)
            else:
                out.write(write_report_csv(report))
        elif args.command == "oracle":
            out.write(ORACLES[args.name](_parse_params(args.params)))
        elif args.command == "summarize":
            s = summarize_seqs(read_seq_table(args.seqfile))
            out.write("pi0,S,D,H0\n")
            out.write(f"{s.pi0!r},{s.S},{s.D!r},{s.H0!r}\n")
        elif args.command == "replicate":
            text = run_study(args.study, scale=args.scale, seed=args.seed).to_csv()
            if args.output:
                with open(args.output, "w") as fh:
                    fh.write(text)
            else:
                out.write(text)
    except (AbcError, CatalogError, OSError, ValueError) as err:
        print(f"abc-lab: error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
