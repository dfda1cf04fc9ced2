"""Command-line front end tying the pipeline together.

Subcommands:

  gen    build training samples (random CSG scenes or an OBJ shape)
  train  fit one network head on a generated dataset
  infer  run a trained network on a grid or point-cloud file
  mesh   extract a mesh (dc / dc-est / mc / ndc / undc)
  eval   compare a predicted mesh against a ground-truth mesh
  stats  edge-topology statistics of a mesh file

Exit codes: 0 success, 1 usage error, 2 data error (bad files, missing
inputs, diverged training). All randomness flows from a single --seed
per subcommand; sub-seeds are derived with the library mixing function,
so reruns with the same arguments produce byte-identical artifacts.

Each subcommand accepts --config FILE holding flat key=value lines
(keys are the long option names with dashes or underscores). Values
from the file act as defaults; explicit flags override them.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import fileio
from .csg import CsgShape, csg_normal_fn, random_scene
from .datagen import make_training_sample
from .dc import dc_extract
from .errors import NdcMeshError
from .grids import (EdgeField, GridDims, GridKind, ScalarGrid, SignGrid,
                    VertexOffsetGrid, xor_flags)
from .mc import mc_extract
from .mesh import QuadMesh, TriMesh, edge_topology_stats, split_quads
from .metrics import evaluate_mesh
from .ndc import close_holes, ndc_extract, undc_extract
from .nn import GRID_VARIANTS, TrainConfig, train_network
from .rng import derive_seed

MANIFEST_NAME = "manifest.txt"

# CLI spellings for network inputs and heads
KIND_NAMES = {"sdf": GridKind.SDF, "udf": GridKind.UDF,
              "voxel": GridKind.OCC, "points": "points"}
HEAD_NAMES = {"signs": "sign", "flags": "flag", "vertices": "vertex"}
VARIANT_KEYS = {("sdf", "sign"): "sdf_s", ("sdf", "vertex"): "sdf_v",
                ("sdf", "flag"): "sdf_f", ("udf", "vertex"): "sdf_v",
                ("udf", "flag"): "sdf_f", ("voxel", "sign"): "vox_s",
                ("voxel", "vertex"): "vox_v", ("voxel", "flag"): "vox_f"}
WEIGHT_STEMS = {"sign": ("sdf_s", "vox_s"),
                "vertex": ("sdf_v", "vox_v", "pc_v"),
                "flag": ("pc_f", "sdf_f", "vox_f")}


class UsageError(Exception):
    """Semantic misuse that argparse choices cannot express."""


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# shared plumbing


def _sample_dir(data: str, index: int) -> str:
    return os.path.join(data, f"sample_{index:03d}")


def _load_manifest(data: str) -> dict:
    path = os.path.join(data, MANIFEST_NAME)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no manifest at {path}; run `gen` first")
    return fileio.read_report(path)


def _manifest_dims(manifest: dict) -> GridDims:
    r = int(manifest["res"])
    return GridDims(r, r, r)


def _source_for(manifest: dict, index: int):
    """Recreate the shape a sample was generated from."""
    obj = manifest.get("obj", "")
    if obj:
        verts, faces, _ = fileio.read_obj(obj)
        return fileio.as_tri_mesh(verts, faces)
    res = int(manifest["res"])
    scene_seed = derive_seed(int(manifest["csg_seed"]), "scene", index)
    return random_scene(scene_seed, float(res - 1))


def _regenerate_samples(manifest: dict) -> list:
    """Rebuild the TrainingSamples a manifest describes.

    Masks and raw grids are deterministic functions of the recorded
    parameters, so only the manifest needs to live on disk.
    """
    dims = _manifest_dims(manifest)
    kind = KIND_NAMES[manifest["kind"]]
    seed = int(manifest["seed"])
    count = int(manifest["count"])
    cloud_size = int(manifest["cloud_size"])
    noise_sigma = float(manifest["noise_sigma"])
    samples = []
    for i in range(count):
        source = _source_for(manifest, i)
        samples.append(make_training_sample(
            source, dims, kind=kind, seed=derive_seed(seed, "sample", i),
            cloud_size=cloud_size, noise_sigma=noise_sigma))
    return samples


def _expect(obj, cls, what: str, path: str):
    if not isinstance(obj, cls):
        raise NdcMeshError(
            f"{path} holds {type(obj).__name__}, expected {cls.__name__} for {what}")
    return obj


def _as_tri(mesh) -> TriMesh:
    """Deterministic quad split for metric evaluation."""
    if isinstance(mesh, TriMesh):
        return mesh
    faces = list(np.asarray(mesh.quads, dtype=np.int64))
    return fileio.as_tri_mesh(mesh.vertices, faces)


def _face_count(mesh) -> int:
    return len(mesh.tris) if isinstance(mesh, TriMesh) else len(mesh.quads)


def _infer_with(net, sdir: str, manifest: dict):
    """Run a loaded network on the stored input of one sample."""
    if net.variant == "pc_encoder":
        cloud_path = os.path.join(sdir, "cloud.xyz")
        cloud = fileio.read_xyz(cloud_path)
        return net.predict(cloud, _manifest_dims(manifest))
    input_kind = GridKind.OCC if GRID_VARIANTS[net.variant][0] == "occ" else GridKind.SDF
    if manifest.get("kind") == "udf":
        input_kind = GridKind.UDF
    grid = fileio.read_grid(os.path.join(sdir, "input.ndcg"), input_kind)
    return net.predict(grid)


def _resolve_field(explicit, data: str, sdir: str, head: str, gt_name: str,
                   cls, what: str):
    """Load a prediction field: explicit file > trained weights > GT file."""
    if explicit:
        return _expect(fileio.read_grid(explicit), cls, what, explicit)
    manifest = _load_manifest(data)
    for stem in WEIGHT_STEMS[head]:
        wpath = os.path.join(data, stem + ".ndcw")
        if os.path.exists(wpath):
            net = fileio.load_weights(wpath)
            return _infer_with(net, sdir, manifest)
    gt_path = os.path.join(sdir, gt_name)
    if os.path.exists(gt_path):
        return _expect(fileio.read_grid(gt_path), cls, what, gt_path)
    raise FileNotFoundError(f"no {what}: pass a file, or train a {head} head")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> None:
    kind = args.kind
    csg_seed = args.csg_seed if args.csg_seed is not None else derive_seed(args.seed, "csg")
    dims = GridDims(args.res, args.res, args.res)
    os.makedirs(args.out, exist_ok=True)

    manifest = {
        "kind": kind, "res": args.res, "count": args.count,
        "csg_seed": csg_seed, "seed": args.seed,
        "cloud_size": args.cloud_size, "noise_sigma": args.noise_sigma,
        "obj": os.path.abspath(args.obj) if args.obj else "",
    }
    fileio.write_report(os.path.join(args.out, MANIFEST_NAME), manifest)

    for i in range(args.count):
        source = _source_for(manifest, i)
        sample = make_training_sample(
            source, dims, kind=KIND_NAMES[kind],
            seed=derive_seed(args.seed, "sample", i),
            cloud_size=args.cloud_size, noise_sigma=args.noise_sigma)
        sdir = _sample_dir(args.out, i)
        os.makedirs(sdir, exist_ok=True)
        if sample.grid is not None:
            fileio.write_grid(os.path.join(sdir, "input.ndcg"), sample.grid)
        if sample.cloud is not None:
            fileio.write_xyz(os.path.join(sdir, "cloud.xyz"), sample.cloud)
        fileio.write_grid(os.path.join(sdir, "gt_signs.ndcg"), sample.gt_signs)
        fileio.write_grid(os.path.join(sdir, "gt_flags.ndcg"), sample.gt_flags)
        fileio.write_grid(os.path.join(sdir, "gt_vertices.ndcg"), sample.gt_offsets)
        if sample.mode == "ndc":
            gt_mesh = ndc_extract(sample.gt_signs, sample.gt_offsets)
        else:
            gt_mesh = undc_extract(sample.gt_flags, sample.gt_offsets)
        fileio.write_obj(os.path.join(sdir, "gt_mesh.obj"), gt_mesh)
        print(f"sample {i}: {len(gt_mesh.vertices)} gt vertices, "
              f"{_face_count(gt_mesh)} gt faces -> {sdir}")


def cmd_train(args) -> None:
    manifest = _load_manifest(args.data)
    head = HEAD_NAMES[args.head]
    input_name = args.variant or manifest["kind"]
    if input_name == "points":
        if head == "sign":
            raise UsageError("point-cloud networks have no sign head; "
                             "use --head flags or --head vertices")
        variant = "pc_encoder"
        stem = "pc_" + head[0]
    else:
        try:
            variant = VARIANT_KEYS[(input_name, head)]
        except KeyError:
            raise UsageError(f"no {args.head} head for --variant {input_name}")
        stem = variant

    samples = _regenerate_samples(manifest)
    if args.steps is not None:
        epochs = max(1, -(-args.steps // len(samples)))
    else:
        epochs = args.epochs
    config = TrainConfig(
        variant=variant, head=head, channels=args.channels, lr=args.lr,
        epochs=epochs, halve_every=args.halve_every, augment=args.augment,
        seed=derive_seed(args.seed, "train", stem), stop_below=args.stop_below)
    net, history = train_network(config, samples)

    out = args.out or os.path.join(args.data, stem + ".ndcw")
    fileio.save_weights(out, net)
    steps_run = len(history) * len(samples)
    print(f"{stem}: {len(history)} epochs ({steps_run} steps), "
          f"final loss {history[-1]:.6g} -> {out}")


def cmd_infer(args) -> None:
    if not args.grid and not args.cloud:
        raise UsageError("pass --grid FILE or --cloud FILE")
    suffix = {"sign": "_signs.ndcg", "vertex": "_vertices.ndcg",
              "flag": "_flags.ndcg"}
    for wpath in args.weights:
        net = fileio.load_weights(wpath)
        if net.variant == "pc_encoder":
            if not args.cloud:
                raise UsageError(f"{wpath} is a point-cloud network; pass --cloud")
            if args.res is None:
                raise UsageError("--res is required with --cloud")
            cloud = fileio.read_xyz(args.cloud)
            pred = net.predict(cloud, GridDims(args.res, args.res, args.res))
        else:
            if not args.grid:
                raise UsageError(f"{wpath} is a grid network; pass --grid")
            if args.grid_kind:
                kind = KIND_NAMES[args.grid_kind]
            else:
                kind = GridKind.OCC if GRID_VARIANTS[net.variant][0] == "occ" else GridKind.SDF
            pred = net.predict(fileio.read_grid(args.grid, kind))
        out = args.out_prefix + suffix[net.head]
        fileio.write_grid(out, pred)
        print(f"{net.variant}/{net.head} -> {out}")


def cmd_mesh(args) -> None:
    sdir = _sample_dir(args.data, args.sample)
    out = args.out or os.path.join(args.data, f"mesh_{args.mode}.obj")

    if args.mode in ("dc", "dc-est", "mc"):
        if args.close_holes:
            print("note: --close-holes only applies to undc", file=sys.stderr)
        if args.sdf:
            grid = _expect(fileio.read_grid(args.sdf, GridKind.SDF),
                           ScalarGrid, "a scalar grid", args.sdf)
        else:
            path = os.path.join(sdir, "input.ndcg")
            grid = _expect(fileio.read_grid(path, GridKind.SDF),
                           ScalarGrid, "a scalar grid", path)
        if args.mode == "mc":
            mesh = mc_extract(grid, args.iso)
        elif args.mode == "dc-est":
            mesh = dc_extract(grid, "estimated", args.iso)
        else:
            # exact normals come from the generating CSG scene
            manifest = _load_manifest(args.data)
            source = _source_for(manifest, args.sample)
            if not isinstance(source, CsgShape):
                raise NdcMeshError("mode dc needs analytic normals from a CSG "
                                   "scene; use dc-est for mesh-derived grids")
            mesh = dc_extract(grid, csg_normal_fn(source), args.iso)
    elif args.mode == "ndc":
        if args.close_holes:
            print("note: --close-holes only applies to undc", file=sys.stderr)
        signs = _resolve_field(args.signs, args.data, sdir, "sign",
                               "gt_signs.ndcg", SignGrid, "a sign grid")
        offsets = _resolve_field(args.offsets, args.data, sdir, "vertex",
                                 "gt_vertices.ndcg", VertexOffsetGrid,
                                 "vertex offsets")
        mesh = ndc_extract(signs, offsets)
    else:  # undc
        flags = _resolve_field(args.flags, args.data, sdir, "flag",
                               "gt_flags.ndcg", EdgeField, "edge flags")
        offsets = _resolve_field(args.offsets, args.data, sdir, "vertex",
                                 "gt_vertices.ndcg", VertexOffsetGrid,
                                 "vertex offsets")
        if args.close_holes:
            flags = close_holes(flags)
        mesh = undc_extract(flags, offsets)

    if args.tri_seed is not None and isinstance(mesh, QuadMesh):
        mesh = split_quads(mesh, args.tri_seed)
    fileio.write_mesh(out, mesh)
    print(f"{args.mode}: {len(mesh.vertices)} vertices, "
          f"{_face_count(mesh)} faces -> {out}")


def cmd_eval(args) -> None:
    pred_path = args.pred or os.path.join(args.data, "mesh_ndc.obj")
    gt_path = args.gt or os.path.join(_sample_dir(args.data, args.sample),
                                      "gt_mesh.obj")
    pred = _as_tri(fileio.read_mesh(pred_path))
    gt = _as_tri(fileio.read_mesh(gt_path))
    report = evaluate_mesh(pred, gt, samples=args.samples,
                           seed=derive_seed(args.seed, "eval"))
    values = report.as_dict()
    sys.stdout.write(fileio.format_report(values))
    if args.out:
        fileio.write_report(args.out, values)
    if args.csv:
        row = {"pred": pred_path, "gt": gt_path, **values}
        new = not os.path.exists(args.csv)
        with open(args.csv, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(row))
            if new:
                writer.writeheader()
            writer.writerow(row)


def cmd_stats(args) -> None:
    mesh = fileio.read_mesh(args.mesh)
    st = edge_topology_stats(mesh)
    values = {
        "v_count": len(mesh.vertices), "f_count": _face_count(mesh),
        "edge_count": st.edge_count, "boundary": st.boundary,
        "manifold": st.manifold, "nonmanifold3": st.nonmanifold3,
        "nonmanifold4": st.nonmanifold4,
    }
    for key, frac in st.fractions.items():
        values[key + "_pct"] = 100.0 * frac
    sys.stdout.write(fileio.format_report(values))
    if args.out:
        fileio.write_report(args.out, values)


# ---------------------------------------------------------------------------
# parser


def _add_common(sub) -> None:
    sub.add_argument("--config", help="key=value file of defaults")
    sub.add_argument("--seed", type=int, default=0, help="top-level seed")


def build_parser():
    parser = _Parser(prog="ndcmesh", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", metavar="command")
    table = {}

    g = table["gen"] = subs.add_parser("gen", help="generate training samples")
    g.add_argument("--out", default="runs", help="output dataset directory")
    g.add_argument("--count", type=int, default=1, help="number of samples")
    g.add_argument("--res", type=int, default=32, help="grid resolution per axis")
    g.add_argument("--kind", choices=sorted(KIND_NAMES), default="sdf",
                   help="network input kind")
    g.add_argument("--csg-seed", type=int, default=None,
                   help="scene seed (default: derived from --seed)")
    g.add_argument("--cloud-size", type=int, default=4096,
                   help="points per cloud (kind=points)")
    g.add_argument("--noise-sigma", type=float, default=0.0,
                   help="cloud noise, in cell units")
    g.add_argument("--obj", help="build samples from this OBJ instead of CSG")
    _add_common(g)
    g.set_defaults(func=cmd_gen)

    t = table["train"] = subs.add_parser("train", help="train one network head")
    t.add_argument("--data", default="runs", help="dataset directory from gen")
    t.add_argument("--head", choices=sorted(HEAD_NAMES))
    t.add_argument("--variant", choices=["sdf", "udf", "voxel", "points"],
                   default=None, help="input variant (default: dataset kind)")
    t.add_argument("--steps", type=int, default=None,
                   help="optimizer steps (rounded up to whole epochs)")
    t.add_argument("--epochs", type=int, default=400)
    t.add_argument("--channels", type=int, default=24,
                   help="network width (small default keeps CPU runs quick)")
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--halve-every", type=int, default=100,
                   help="halve lr every N epochs (0 disables)")
    t.add_argument("--augment", action="store_true",
                   help="random transform per sample per epoch")
    t.add_argument("--stop-below", type=float, default=None,
                   help="stop once the epoch loss drops below this")
    t.add_argument("--out", help="weights file (default: DATA/<variant>.ndcw)")
    _add_common(t)
    t.set_defaults(func=cmd_train)

    i = table["infer"] = subs.add_parser("infer", help="run trained networks")
    i.add_argument("--weights", action="append",
                   help="weights file (repeatable)")
    i.add_argument("--grid", help="input NDCGRID scalar grid")
    i.add_argument("--grid-kind", choices=["sdf", "udf", "voxel"], default=None)
    i.add_argument("--cloud", help="input xyz point cloud")
    i.add_argument("--res", type=int, default=None,
                   help="output grid resolution for --cloud")
    i.add_argument("--out-prefix", default="pred")
    _add_common(i)
    i.set_defaults(func=cmd_infer)

    m = table["mesh"] = subs.add_parser("mesh", help="extract a mesh")
    m.add_argument("--mode", choices=["dc", "dc-est", "mc", "ndc", "undc"])
    m.add_argument("--data", default="runs", help="dataset directory")
    m.add_argument("--sample", type=int, default=0, help="sample index")
    m.add_argument("--sdf", help="scalar grid file (dc/dc-est/mc)")
    m.add_argument("--signs", help="sign grid file (ndc)")
    m.add_argument("--flags", help="edge flag file (undc)")
    m.add_argument("--offsets", help="vertex offset file (ndc/undc)")
    m.add_argument("--iso", type=float, default=0.0)
    m.add_argument("--close-holes", action="store_true",
                   help="repair isolated missing flags before undc")
    m.add_argument("--tri-seed", type=int, default=None,
                   help="split quads into triangles with this seed")
    m.add_argument("-o", "--out", help="output .obj or .ply")
    _add_common(m)
    m.set_defaults(func=cmd_mesh)

    e = table["eval"] = subs.add_parser("eval", help="compare two meshes")
    e.add_argument("pred", nargs="?", help="predicted mesh (.obj/.ply)")
    e.add_argument("gt", nargs="?", help="ground-truth mesh")
    e.add_argument("--data", default="runs", help="dataset directory defaults")
    e.add_argument("--sample", type=int, default=0)
    e.add_argument("--samples", type=int, default=20000,
                   help="surface samples per mesh")
    e.add_argument("-o", "--out", help="write the report here too")
    e.add_argument("--csv", help="append one row to this CSV")
    _add_common(e)
    e.set_defaults(func=cmd_eval)

    s = table["stats"] = subs.add_parser("stats", help="mesh topology stats")
    s.add_argument("mesh", help="mesh file (.obj/.ply)")
    s.add_argument("-o", "--out", help="write the report here too")
    _add_common(s)
    s.set_defaults(func=cmd_stats)

    return parser, table


def _coerce_config(sub, values: dict) -> dict:
    """Map config-file strings onto a subparser's defaults."""
    known = {}
    for action in sub._actions:
        if action.dest in ("help", "config"):
            continue
        known[action.dest] = action
    out = {}
    for raw_key, raw in values.items():
        key = raw_key.replace("-", "_")
        if key not in known:
            raise NdcMeshError(f"unknown config key: {raw_key}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            out[key] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            out[key] = action.type(raw)
        else:
            out[key] = raw
    return out


# flags that must be present after config defaults are folded in
_REQUIRED = {"train": ["head"], "infer": ["weights"], "mesh": ["mode"]}


def _config_path(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def cli_main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, table = build_parser()
    try:
        # fold config-file values in as defaults before the real parse,
        # so explicit flags override them and required checks see both
        command = next((a for a in argv if not a.startswith("-")), None)
        config = _config_path(argv)
        if config and command in table:
            sub = table[command]
            sub.set_defaults(**_coerce_config(sub, fileio.read_report(config)))
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        for dest in _REQUIRED.get(args.command, []):
            if getattr(args, dest) in (None, []):
                table[args.command].error(
                    f"the following arguments are required: --{dest}")
        args.func(args)
    except SystemExit as exc:  # argparse: -h exits 0, usage errors exit 1
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NdcMeshError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
