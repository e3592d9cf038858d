"""Unified command-line front end.

Every command prints a single JSON document (sorted keys, no
timestamps), so identical (command, config, seed) runs are
byte-identical.  Exit codes: 0 all-pass, 1 verified failure found,
2 inconclusive or resource/configuration trouble.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

import numpy as np

from . import __version__
from .chevalley import Chevalley
from .config import RunConfig
from .errors import ChevflagError, ConfigError, ResourceError
from .fields import GFq
from .flagmod import EJPresentation, FlagSpace, MJPresentation, spin
from .linalg import PrimeField, coeff_field, mat_hash
from .rootsys import build_root_system, descents, inversion_sets, parabolic_data, weyl_group


def _parse_type(args) -> tuple[str, int]:
    t = args.type
    if len(t) > 1 and t[1:].isdigit():
        return t[0], int(t[1:])
    if getattr(args, "rank", None) is None:
        raise ConfigError("rank missing: pass --rank N or --type A2 style")
    return t, args.rank


def _emit(doc, args) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _config_of(args, **overrides) -> RunConfig:
    tl, rank = _parse_type(args)
    cfg = RunConfig(
        type_label=tl,
        rank=rank,
        q=getattr(args, "q", 2) or 2,
        coeff=getattr(args, "coeff", "F5") or "F5",
        J=getattr(args, "J", "all") if getattr(args, "J", None) is not None else "all",
        seed=getattr(args, "seed", 0) or 0,
        trials=getattr(args, "trials", 100) or 100,
        budget=getattr(args, "budget", 10000) or 10000,
    )
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config": {
            "type": f"{cfg.type_label}{cfg.rank}",
            "q": cfg.q,
            "coeff": cfg.coeff,
            "J": cfg.J,
            "seed": cfg.seed,
            "trials": cfg.trials,
            "budget": cfg.budget,
        },
        "config_hash": cfg.hash(),
        "version": __version__,
    }


# -- rootsys ----------------------------------------------------------------


def cmd_rootsys_report(args) -> int:
    cfg = _config_of(args)
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    group = weyl_group(sys_)
    doc = _header(cfg, "rootsys report")
    doc["positive_roots"] = [list(r) for r in sys_.pos_roots]
    doc["heights"] = list(sys_.heights)
    doc["cartan"] = [list(r) for r in sys_.cartan]
    doc["weyl"] = [
        {
            "word": [i + 1 for i in w.word],
            "length": w.length,
            "descents": sorted(i + 1 for i in descents(w)),
            "inversions": sorted(inversion_sets(w)[0]),
        }
        for w in group.elements
    ]
    subsets = RunConfig(J="all").subsets(cfg.rank)
    doc["parabolic"] = []
    for J in subsets:
        par = parabolic_data(group, J)
        doc["parabolic"].append(
            {
                "J": sorted(i + 1 for i in J),
                "w_J": [i + 1 for i in par.w_J.word],
                "X_J": [[i + 1 for i in w.word] for w in par.X_J],
                "Y_J": [[i + 1 for i in w.word] for w in par.Y_J],
            }
        )
    _emit(doc, args)
    return 0


# -- chevalley ----------------------------------------------------------------


def cmd_chevalley_selfcheck(args) -> int:
    cfg = _config_of(args)
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    rng = random.Random(cfg.seed)
    doc = _header(cfg, "chevalley selfcheck")
    failures = 0
    oracle = ch.to_matrix if sys_.type_label == "A" else ch.oracle_matrix
    for _ in range(cfg.trials):
        u = ch.random_unipotent(rng)
        v = ch.random_unipotent(rng)
        w = u * v
        lhs = oracle(ch.word_of_unipotent(u) + ch.word_of_unipotent(v))
        rhs = oracle(ch.word_of_unipotent(w))
        if lhs != rhs:
            failures += 1
    doc["collection_vs_matrix"] = {"trials": cfg.trials, "failures": failures}
    sl2_fail = 0
    for i in range(sys_.rank):
        for c in ch.field.units():
            f, h, g = ch.sl2_decompose(i, c)
            lhs = oracle([("s", i), ("r", sys_.simple_idx[i], c)] + ch.si_inv_word(i))
            rhs = oracle(
                ch.word_of_unipotent(f) + [("s", i), ("t", h.values)] + ch.word_of_unipotent(g)
            )
            if lhs != rhs:
                sl2_fail += 1
    doc["sl2_identity"] = {"cases": sys_.rank * (ch.field.q - 1), "failures": sl2_fail}
    doc["verdict"] = "pass" if failures == 0 and sl2_fail == 0 else "fail"
    _emit(doc, args)
    return 0 if doc["verdict"] == "pass" else 1


# -- flagmod --------------------------------------------------------------------


def cmd_flagmod_build(args) -> int:
    cfg = _config_of(args)
    if cfg.coeff == "Q":
        raise ConfigError("flagmod build reports need a prime coefficient field")
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    space = FlagSpace(ch)
    F = coeff_field(cfg.coeff)
    doc = _header(cfg, "flagmod build")
    doc["flag_dim"] = space.dim
    mode = getattr(args, "mode", "both") or "both"
    entries = []
    all_ok = True
    total = 0
    for J in cfg.subsets(cfg.rank):
        mj = MJPresentation(space, J, F)
        ej = EJPresentation(space, J, F, mode=mode)
        total += ej.dim
        all_ok &= mj.check.ok and ej.check.ok
        if mode == "both":
            all_ok &= bool(ej.mode_agreement)
        entries.append(
            {
                "J": sorted(i + 1 for i in J),
                "dim_M_J": mj.dim,
                "dim_E_J": ej.dim,
                "basis_cells": [
                    {"w": [i + 1 for i in w.word], "cell_size": ch.field.q ** len(ej.cells[w])}
                    for w in ej.ws
                ],
                "M_basis_ok": mj.check.ok,
                "E_basis_ok": ej.check.ok,
                "mode_agreement": ej.mode_agreement,
                "matrix_hashes": sorted(
                    mat_hash(M, F.ell) for M in getattr(ej, "gen_matrices", {}).values()
                ),
            }
        )
    doc["modules"] = entries
    doc["dim_partition_total"] = total
    doc["dim_partition_ok"] = total == space.dim if cfg.J == "all" else None
    doc["verdict"] = "pass" if all_ok and (cfg.J != "all" or total == space.dim) else "fail"
    _emit(doc, args)
    return 0 if doc["verdict"] == "pass" else 1


# -- selfenc ----------------------------------------------------------------------


def _parse_gens(text: str, ch: Chevalley):
    out = []
    for elt in text.split(";"):
        coords = []
        for pair in elt.split(","):
            if not pair.strip():
                continue
            g, c = pair.split("=")
            coords.append((int(g), int(c)))
        out.append(ch.unipotent(coords).coords)
    return out


def cmd_selfenc_closure(args) -> int:
    from .selfenc import closure, is_self_enclosed, minimal_self_enclosed

    cfg = _config_of(args, coeff="F2")
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    gens = _parse_gens(args.gens, ch) if args.gens else []
    if not gens:
        raise ConfigError("pass --gens like '0=1;1=1' (root-index=field-code)")
    H = closure(ch, gens, cap=cfg.subgroup_cap)
    orders = args.orders or "auto"
    if orders.startswith("sample:"):
        orders = int(orders.split(":", 1)[1])
    elif orders == "exhaustive":
        orders = "all"
    verdicts = is_self_enclosed(ch, H.elements, orders, seed=cfg.seed)
    doc = _header(cfg, "selfenc closure")
    doc["generators"] = [[list(x) for x in g] for g in gens]
    doc["closure_size"] = H.size
    doc["orders_checked"] = len(verdicts)
    doc["per_order"] = [
        {"order": list(o), "self_enclosed": ok} for o, ok in verdicts
    ]
    doc["all_orders_ok"] = all(ok for _, ok in verdicts)
    mini = minimal_self_enclosed(ch, gens, "auto", cap=cfg.subgroup_cap)
    doc["matches_bruteforce_minimal"] = mini.elements == H.elements
    doc["verdict"] = "pass" if doc["all_orders_ok"] else "fail"
    _emit(doc, args)
    return 0 if doc["all_orders_ok"] else 1


# -- augment -----------------------------------------------------------------------


def cmd_augment_search(args) -> int:
    from .augment import augmentation, nonvanishing_search, verify_search

    cfg = _config_of(args)
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    space = FlagSpace(ch)
    F = coeff_field(cfg.coeff)
    doc = _header(cfg, "augment search")
    per_j = []
    all_found = True
    for J in cfg.subsets(cfg.rank):
        pres = EJPresentation(space, J, F)
        trials = []
        for t in range(cfg.trials):
            rng = random.Random(cfg.seed * 100003 + t)
            v = np.array([rng.randrange(F.ell) for _ in range(pres.dim)], dtype=np.int64)
            if not v.any():
                v[0] = 1
            res = nonvanishing_search(pres, v, budget=cfg.budget, seed=cfg.seed * 100003 + t)
            ok = res.found and verify_search(pres, v, res)
            all_found &= ok
            trials.append(
                {
                    "trial": t,
                    "found": res.found,
                    "verified": ok,
                    "moves": res.moves,
                    "word_length": len(res.word),
                    "profile": list(res.profile),
                }
            )
        per_j.append(
            {
                "J": sorted(i + 1 for i in J),
                "dim": pres.dim,
                "success_rate": sum(1 for t in trials if t["found"]) / len(trials),
                "trials": trials,
            }
        )
    doc["searches"] = per_j
    doc["all_found"] = all_found
    doc["verdict"] = "pass" if all_found else "exhaustion-reported"
    _emit(doc, args)
    return 0 if all_found else 2


# -- charp --------------------------------------------------------------------------


def cmd_charp_pipeline(args) -> int:
    from .charp import charp_pipeline

    p = args.p or 2
    cfg = _config_of(args, q=p, coeff=f"F{p}")
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    space = FlagSpace(ch)
    F = PrimeField(p)
    doc = _header(cfg, "charp pipeline")
    per_j = []
    bad = 0
    for J in cfg.subsets(cfg.rank):
        pres = EJPresentation(space, J, F)
        trials = []
        for t in range(cfg.trials):
            rng = random.Random(cfg.seed * 99991 + t)
            v = np.array([rng.randrange(F.ell) for _ in range(pres.dim)], dtype=np.int64)
            if not v.any():
                v[0] = 1
            rep = charp_pipeline(pres, v)
            if not rep.ok and rep.infeasible_proof is None:
                bad += 1
            trials.append({"trial": t, **rep.summary()})
        per_j.append({"J": sorted(i + 1 for i in J), "dim": pres.dim, "trials": trials})
    doc["pipelines"] = per_j
    doc["unexplained_failures"] = bad
    doc["verdict"] = "pass" if bad == 0 else "fail"
    _emit(doc, args)
    return 0 if bad == 0 else 1


# -- modengine -------------------------------------------------------------------------


def cmd_modengine_factors(args) -> int:
    from .modengine import MatrixModule, composition_factors

    with open(args.input) as fh:
        doc_in = json.load(fh)
    dim, ell, count = doc_in["dim"], doc_in["ell"], doc_in["generators"]
    mats = [
        np.array(doc_in["matrices"][k], dtype=np.int64).reshape(dim, dim)
        for k in range(count)
    ]
    M = MatrixModule(dim, ell, mats, doc_in.get("provenance", args.input))
    rep = composition_factors(M, seed=args.seed or 0)
    doc = {
        "command": "modengine factors",
        "input": args.input,
        "dim": dim,
        "ell": ell,
        **rep.summary(),
    }
    _emit(doc, args)
    if not rep.complete:
        return 2
    return 0


def cmd_modengine_export(args) -> int:
    cfg = _config_of(args)
    if cfg.coeff == "Q":
        raise ConfigError("module export needs a prime coefficient field")
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    ch = Chevalley(sys_, GFq(cfg.q))
    space = FlagSpace(ch)
    ell = int(cfg.coeff[1:])
    mats = []
    for wd in space.generators():
        perm = space.perm_of_word(wd)
        A = np.zeros((space.dim, space.dim), dtype=np.int64)
        A[perm, np.arange(space.dim)] = 1
        mats.append(A)
    doc = {
        "dim": space.dim,
        "ell": ell,
        "generators": len(mats),
        "provenance": f"F{ell}[{cfg.type_label}{cfg.rank}(F{cfg.q})/B]",
        "matrices": [A.flatten().tolist() for A in mats],
    }
    _emit(doc, args)
    return 0


# -- verify ------------------------------------------------------------------------------


def cmd_verify_all(args) -> int:
    cfg = _config_of(args)
    doc = _header(cfg, "verify all")
    checks = {}
    sys_ = build_root_system(cfg.type_label, cfg.rank)
    group = weyl_group(sys_)
    # rootsys: length partition identity
    from .rootsys import poincare_poly

    counts: dict[int, int] = {}
    for J in RunConfig(J="all").subsets(cfg.rank):
        par = parabolic_data(group, J)
        for w in par.Y_J:
            d = (par.w_J * w.inverse()).length
            counts[d] = counts.get(d, 0) + 1
    checks["poincare_partition"] = counts == poincare_poly(group)
    # chevalley: collection vs matrices
    ch = Chevalley(sys_, GFq(cfg.q))
    rng = random.Random(cfg.seed)
    oracle = ch.to_matrix if sys_.type_label == "A" else ch.oracle_matrix
    ok = True
    for _ in range(min(cfg.trials, 200)):
        u, v = ch.random_unipotent(rng), ch.random_unipotent(rng)
        ok &= oracle(ch.word_of_unipotent(u) + ch.word_of_unipotent(v)) == oracle(
            ch.word_of_unipotent(u * v)
        )
    checks["collection_oracle"] = ok
    # flagmod: dimension partition and mode agreement
    F = coeff_field(cfg.coeff)
    space = FlagSpace(ch)
    total = 0
    basis_ok = True
    agree = True
    for J in RunConfig(J="all").subsets(cfg.rank):
        ej = EJPresentation(space, J, F, mode="both")
        total += ej.dim
        basis_ok &= ej.check.ok
        agree &= bool(ej.mode_agreement)
    checks["dim_partition"] = total == space.dim
    checks["basis_propositions"] = basis_ok
    checks["mode_agreement"] = agree
    doc["checks"] = checks
    doc["verdict"] = "pass" if all(checks.values()) else "fail"
    _emit(doc, args)
    return 0 if doc["verdict"] == "pass" else 1


# -- parser -------------------------------------------------------------------------------


def _add_common(p, *, q=True, coeff=True, J=True, trials=True):
    p.add_argument("--type", required=True, help="A, D, E or A2-style")
    p.add_argument("--rank", type=int, default=None)
    if q:
        p.add_argument("--q", type=int, default=2)
    if coeff:
        p.add_argument("--coeff", default="F5", help="F<prime> or Q")
    if J:
        p.add_argument("--J", default="all", help="'all', 'none', or 1-based '1,2'")
    if trials:
        p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10000)
    p.add_argument("--out", default=None, help="also write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chevflag")
    sub = ap.add_subparsers(dest="module", required=True)

    p = sub.add_parser("rootsys").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("report")
    _add_common(r, q=False, coeff=False, J=False, trials=False)
    r.set_defaults(fn=cmd_rootsys_report)

    p = sub.add_parser("chevalley").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("selfcheck")
    _add_common(r, coeff=False, J=False)
    r.set_defaults(fn=cmd_chevalley_selfcheck)

    p = sub.add_parser("flagmod").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("build")
    _add_common(r, trials=False)
    r.add_argument("--mode", choices=["quotient", "rewriting", "both"], default="both")
    r.set_defaults(fn=cmd_flagmod_build)

    p = sub.add_parser("selfenc").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("closure")
    _add_common(r, coeff=False, J=False, trials=False)
    r.add_argument("--gens", required=True, help="elements '0=1,2=3;1=1' (root=code)")
    r.add_argument("--orders", default="auto", help="auto | exhaustive | sample:N")
    r.set_defaults(fn=cmd_selfenc_closure)

    p = sub.add_parser("augment").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("search")
    _add_common(r)
    r.set_defaults(fn=cmd_augment_search)

    p = sub.add_parser("charp").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("pipeline")
    _add_common(r, q=False, coeff=False)
    r.add_argument("--p", type=int, default=2)
    r.set_defaults(fn=cmd_charp_pipeline)

    p = sub.add_parser("modengine").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("factors")
    r.add_argument("--input", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None)
    r.set_defaults(fn=cmd_modengine_factors)
    r = p.add_parser("export")
    _add_common(r, trials=False)
    r.set_defaults(fn=cmd_modengine_export)

    p = sub.add_parser("verify").add_subparsers(dest="cmd", required=True)
    r = p.add_parser("all")
    _add_common(r)
    r.set_defaults(fn=cmd_verify_all)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(json.dumps({"error": "config", "message": str(e)}), file=sys.stderr)
        return 2
    except ResourceError as e:
        print(json.dumps({"error": "resource", "message": str(e)}), file=sys.stderr)
        return 2
    except ChevflagError as e:
        print(json.dumps({"error": "domain", "message": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
