"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N ...: PASS|FAIL`` line; the lines are
repeated in the terminal summary. Run with ``pytest tests/test_acceptance.py -s``.
"""

import math
import time
from contextlib import contextmanager

import numpy as np

from conftest import ACCEPTANCE_LINES, make_session, random_frame, visible_tiles_oracle
from tiled360.geometry import Orientation, cartesian_to_spherical, rotate, rotation_matrix, spherical_to_cartesian
from tiled360.metrics import PSNR_SATURATED, mean_tile_mse, mse, psnr
from tiled360.netpbm import read_pnm
from tiled360.projection import Cubemap, Equirectangular, Filter, Gnomonic, convert_projection
from tiled360.session import load_config, run_replay
from tiled360.stitcher import stitch
from tiled360.tiling import TilingScheme, retile, split
from tiled360.viewport import Fov, Viewport


@contextmanager
def criterion(number, title, time_limit=None):
    checks = []
    t0 = time.perf_counter()
    try:
        yield checks
    except Exception as exc:  # report, then fail below
        checks.append((False, f"raised {type(exc).__name__}: {exc}"))
    elapsed = time.perf_counter() - t0
    if time_limit is not None:
        checks.append((elapsed < time_limit, f"runtime {elapsed:.2f}s < {time_limit}s"))
    failed = [desc for ok, desc in checks if not ok]
    status = "FAIL" if failed else "PASS"
    line = f"criterion {number} ({title}): {status} in {elapsed:.2f}s"
    if failed:
        line += " | failed: " + "; ".join(failed)
    print("\n" + line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def test_criterion_1_geometry():
    with criterion(1, "geometry round trips", 1.0) as checks:
        rng = np.random.default_rng(1)
        az = rng.uniform(-math.pi, math.pi, 1000)
        el = rng.uniform(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 1000)
        v = spherical_to_cartesian(az, el)
        az2, el2 = cartesian_to_spherical(v)
        err = max(np.abs(az2 - az).max(), np.abs(el2 - el).max())
        checks.append((err <= 1e-9, f"spherical->cartesian->spherical err {err:.2e}"))
        err = np.abs(spherical_to_cartesian(az2, el2) - v).max()
        checks.append((err <= 1e-9, f"cartesian->spherical->cartesian err {err:.2e}"))

        angles = rng.uniform(-math.pi, math.pi, (1000, 3))
        worst_orth = worst_det = worst_back = 0.0
        for (yaw, pitch, roll), vec in zip(angles, v):
            r = rotation_matrix(Orientation(yaw, pitch, roll))
            worst_orth = max(worst_orth, np.abs(r.T @ r - np.eye(3)).max())
            worst_det = max(worst_det, abs(np.linalg.det(r) - 1.0))
            worst_back = max(worst_back, np.abs(rotate(r.T, rotate(r, vec)) - vec).max())
        checks.append((worst_orth <= 1e-9, f"orthonormality err {worst_orth:.2e}"))
        checks.append((worst_det <= 1e-9, f"det-1 err {worst_det:.2e}"))
        checks.append((worst_back <= 1e-9, f"rotate/unrotate err {worst_back:.2e}"))


def test_criterion_2_mapping_round_trip():
    with criterion(2, "ERP and CMP pixel round trips", 5.0) as checks:
        g = Equirectangular(256, 128)
        u, v = g.pixel_grid()
        u2, v2, valid = g.sphere_to_image(g.image_to_sphere(u, v))
        err = max(np.abs(u2 - u).max(), np.abs(v2 - v).max())
        checks.append((bool(valid.all()) and err <= 0.5, f"ERP 256x128 max err {err:.3g} px"))

        c = Cubemap(384, 256)
        u, v = c.pixel_grid()
        fu, fv = u % c.face_width, v % c.face_height
        keep = (fu >= 1) & (fu <= c.face_width - 2) & (fv >= 1) & (fv <= c.face_height - 2)
        for face in range(6):
            x0, y0 = c.face_origin(face)
            sel = keep & (u >= x0) & (u < x0 + c.face_width) & (v >= y0) & (v < y0 + c.face_height)
            u2, v2, valid = c.sphere_to_image(c.image_to_sphere(u[sel], v[sel]))
            err = max(np.abs(u2 - u[sel]).max(), np.abs(v2 - v[sel]).max())
            checks.append((bool(valid.all()) and err <= 0.5, f"CMP face {face} max err {err:.3g} px"))


def test_criterion_3_frustum_oracle():
    with criterion(3, "visible tiles equal the per-pixel oracle", 60.0) as checks:
        s = TilingScheme(12, 8, 768, 432)
        g = Equirectangular(768, 432)
        rng = np.random.default_rng(3)
        poses = np.column_stack([rng.uniform(-math.pi, math.pi, 25), rng.uniform(-math.pi / 2, math.pi / 2, 25),
                                 rng.uniform(-math.pi, math.pi, 25)])
        mismatches = 0
        for fov_deg in ((90, 90), (120, 90)):
            view = Viewport(1920, 1080, Fov.from_degrees(*fov_deg))
            for yaw, pitch, roll in poses:
                o = Orientation(yaw, pitch, roll)
                got = view.visible_tiles(s, g, o)
                expected = visible_tiles_oracle(s, rotation_matrix(o), view.fov.fov_x, view.fov.fov_y)
                if got != expected:
                    mismatches += 1
        checks.append((mismatches == 0, f"{mismatches}/50 cases differ from the oracle"))

        # a viewport entirely inside one tile still selects it
        view = Viewport(64, 64, Fov.from_degrees(2, 2))
        x, y, tw, th = s.tile_rect(30)
        az, el = cartesian_to_spherical(g.image_to_sphere(x + (tw - 1) / 2, y + (th - 1) / 2))
        o = Orientation(az, el, 0.0)
        got = view.visible_tiles(s, g, o)
        checks.append((got == {30} == visible_tiles_oracle(s, rotation_matrix(o), view.fov.fov_x, view.fov.fov_y),
                       f"2-degree view inside tile 30 gave {sorted(got)}"))


def test_criterion_4_stitch_split_retile():
    with criterion(4, "stitch, split and retile identities", 10.0) as checks:
        rng = np.random.default_rng(4)
        bad_stitch = bad_retile = 0
        for _ in range(50):
            c1, r1, c2, r2 = (int(x) for x in rng.integers(1, 9, 4))
            kw, kh = (int(x) for x in rng.integers(1, 4, 2))
            w, h = math.lcm(c1, c2) * kw * 2, math.lcm(r1, r2) * kh * 2
            frame = random_frame(rng, w, h, int(rng.choice([1, 3])))
            a, b = TilingScheme(c1, r1, w, h), TilingScheme(c2, r2, w, h)
            channels = 1 if frame.ndim == 2 else 3
            if not np.array_equal(stitch(split(frame, a), a, channels), frame):
                bad_stitch += 1
            back = retile(retile(split(frame, a), a, b), b, a)
            ref = split(frame, a)
            if back.keys() != ref.keys() or any(not np.array_equal(back[i], ref[i]) for i in ref):
                bad_retile += 1
        checks.append((bad_stitch == 0, f"stitch(split(f)) != f on {bad_stitch}/50"))
        checks.append((bad_retile == 0, f"retile round trip differs on {bad_retile}/50"))

        for channels in (1, 3):
            empty = stitch({}, TilingScheme(12, 8, 96, 48), channels)
            shape = (48, 96) if channels == 1 else (48, 96, 3)
            checks.append((empty.shape == shape and empty.dtype == np.uint8 and not empty.any(),
                           f"empty stitch with {channels} channel(s) is not all zero"))


def test_criterion_5_projection_conversion():
    with criterion(5, "projection conversion quality", 30.0) as checks:
        erp, cmp_ = Equirectangular(2048, 1024), Cubemap(1536, 1024)
        for filt in Filter:
            const = np.full(erp.shape, 201, np.uint8)
            back = convert_projection(convert_projection(const, erp, cmp_, filt), cmp_, erp, filt)
            checks.append((np.array_equal(back, const), f"constant round trip not exact with {filt.value}"))

        # smooth horizontal gradient
        ramp = np.floor(255 * (np.arange(2048) + 0.5) / 2048).astype(np.uint8)
        frame = np.tile(ramp, (1024, 1))
        for filt in Filter:
            back = convert_projection(convert_projection(frame, erp, cmp_, filt), cmp_, erp, filt)
            value = psnr(mse(frame[2:-2], back[2:-2]))
            checks.append((value >= 25.0, f"gradient round trip {filt.value} {value:.2f} dB >= 25"))


def _replay(root, **kw):
    cfg = load_config(make_session(root, width=960, height=540, cols=12, rows=8, n_frames=30,
                                   fov=(120, 90), viewport=(480, 270), **kw))
    results = run_replay(cfg)
    files = sorted(p for p in cfg.output_dir.rglob("*") if p.is_file())
    return cfg, results, {str(p.relative_to(cfg.output_dir)): p.read_bytes() for p in files}


def test_criterion_6_end_to_end_replay(tmp_path):
    with criterion(6, "end-to-end replay", 120.0) as checks:
        rng = np.random.default_rng(6)
        trace = [(float(y), float(p), float(r))
                 for y, p, r in zip(rng.uniform(-180, 180, 30), rng.uniform(-60, 60, 30), rng.uniform(-20, 20, 30))]

        cfg, results, first = _replay(tmp_path / "a", trace=trace)
        checks.append((len(results) == 30, f"{len(results)} frames replayed"))
        checks.append((all(r.viewport_mse == 0.0 for r in results), "viewport_mse is 0 for every frame"))
        checks.append((all(r.psnr_db == PSNR_SATURATED for r in results), "psnr is 99.0 dB for every frame"))
        _, _, second = _replay(tmp_path / "b", trace=trace)
        checks.append((first == second, "outputs are byte-identical across runs"))

        s = cfg.tiling
        schedule = [(t, i, 0) for t in range(30) for i in s]
        cfg, results, _ = _replay(tmp_path / "c", trace=trace, schedule=schedule)
        frames = sorted((cfg.output_dir / "viewports").iterdir())
        black = len(frames) == 30 and all(not read_pnm(f).any() for f in frames)
        checks.append((black, "viewports are all black with nothing available"))
        checks.append((all(not r.viewport.any() for r in results), "in-memory viewports are all black"))


def test_criterion_7_metrics_consistency():
    with criterion(7, "mean tile MSE equals frame MSE", None) as checks:
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(20):
            cols, rows = (int(x) for x in rng.integers(1, 13, 2))
            w, h = cols * int(rng.integers(1, 20)), rows * int(rng.integers(1, 20))
            channels = int(rng.choice([1, 3]))
            a, b = random_frame(rng, w, h, channels), random_frame(rng, w, h, channels)
            s = TilingScheme(cols, rows, w, h)
            worst = max(worst, abs(mean_tile_mse(split(a, s), split(b, s), s) - mse(a, b)))
        checks.append((worst <= 1e-9, f"max difference {worst:.2e}"))


def test_viewport_geometry_is_gnomonic():
    # the planar viewport used across the criteria is the gnomonic image of its fov
    view = Viewport(480, 270, Fov.from_degrees(120, 90))
    assert view.geometry == Gnomonic(480, 270, math.radians(120), math.radians(90))
