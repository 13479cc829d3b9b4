//! One PASS/FAIL line per acceptance criterion, each with its time bound.
//! Run: `cargo test -p diffstruct-pipeline --test acceptance`

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use diffstruct::eigen::{relative_residual, solve_modes, EigenOptions, Normalization, RESIDUAL_TOLERANCE};
use diffstruct::fem::{MaterialParams, ShellModel};
use diffstruct::mesh::{build_face_frames, load_obj, primitives, TriangleMesh};
use diffstruct::operators::{assemble_isotropic, assemble_mass, assemble_stiffness, MassLumping};
use diffstruct::sparse::CsrMatrix;
use diffstruct::stripes::{coverage, random_barycentric, StripeParams};
use diffstruct::tensor::{classify, diffusion_tensors, remap, AnisotropySettings, StressFloor, TangentStress};
use diffstruct_pipeline::analysis::{alignment, isotropic_modes, match_coverage, structure_compliance};
use diffstruct_pipeline::params::ParamsFile;
use diffstruct_pipeline::session::{bundle_mesh, extract_structure, precompute, precompute_from_file, stripe_field};
use diffstruct_pipeline::{SessionBundle, SessionConfig};
use nalgebra::{Matrix2, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn config(name: &str) -> SessionConfig {
    SessionConfig::load(&data(&format!("configs/{name}.json"))).unwrap()
}

fn row(name: &str) -> StripeParams {
    ParamsFile::load(&data("params/table1.json")).unwrap().select(Some(name)).unwrap()
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------

fn fem_derivatives() -> Outcome {
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for seed in [1u64, 2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = primitives::grid(4, 3, 1.0, 0.75);
        let positions: Vec<Vector3<f64>> = flat
            .positions()
            .iter()
            .map(|p| {
                let z = 0.3 * (p.x * p.x - p.y * p.y) + rng.random_range(-0.05..0.05);
                Vector3::new(p.x + rng.random_range(-0.04..0.04), p.y + rng.random_range(-0.04..0.04), z)
            })
            .collect();
        let mesh = TriangleMesh::new(positions, flat.faces().to_vec()).unwrap();
        assert_eq!(mesh.vertex_count(), 20);
        let material = MaterialParams { bending_stiffness: 0.5, ..Default::default() };
        let model = ShellModel::new(&mesh, material).unwrap();
        let rest = mesh.positions().to_vec();
        let x: Vec<Vector3<f64>> = rest
            .iter()
            .map(|p| {
                p + Vector3::new(
                    rng.random_range(-0.03..0.03),
                    rng.random_range(-0.03..0.03),
                    rng.random_range(-0.03..0.03),
                )
            })
            .collect();
        let n = 3 * rest.len();
        let h = 1e-6;
        let bump = |x: &[Vector3<f64>], k: usize, s: f64| {
            let mut y = x.to_vec();
            y[k / 3][k % 3] += s;
            y
        };
        let g = model.gradient(&x).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..n {
            let fd = (model.energy(&bump(&x, k, h)).unwrap() - model.energy(&bump(&x, k, -h)).unwrap()) / (2.0 * h);
            num += (fd - g[k]).powi(2);
            den += g[k] * g[k];
        }
        worst_g = worst_g.max((num / den).sqrt());

        let hess = model.membrane_hessian(None).add(&model.bending_hessian(None).unwrap()).to_dense();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..n {
            let gp = model.gradient(&bump(&rest, k, h)).unwrap();
            let gm = model.gradient(&bump(&rest, k, -h)).unwrap();
            for i in 0..n {
                num += ((gp[i] - gm[i]) / (2.0 * h) - hess[(i, k)]).powi(2);
                den += hess[(i, k)].powi(2);
            }
        }
        worst_h = worst_h.max((num / den).sqrt());
    }
    check(
        worst_g <= 1e-4 && worst_h <= 1e-4,
        format!("gradient rel err {worst_g:.2e}, Hessian rel err {worst_h:.2e} (bound 1e-4)"),
    )
}

/// Cotangent Laplacian from corner angles.
fn cotan_laplacian(mesh: &TriangleMesh) -> CsrMatrix {
    let mut t = Vec::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let p = mesh.positions();
            let (a, b) = (p[i] - p[o], p[j] - p[o]);
            let w = 0.5 * a.dot(&b) / a.cross(&b).norm();
            t.extend([(i, j, -w), (j, i, -w), (i, i, w), (j, j, w)]);
        }
    }
    CsrMatrix::from_triplets(mesh.vertex_count(), t)
}

fn operator_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for name in ["sphere", "bar", "torus"] {
        let mesh = load_obj(data(&format!("meshes/{name}.obj"))).unwrap();
        let frames = build_face_frames(&mesh).unwrap();
        let l = assemble_stiffness(&mesh, &frames, &vec![Matrix2::identity(); mesh.face_count()]);
        let c = cotan_laplacian(&mesh);
        let diff = l.add(&c.scaled(-1.0)).max_abs() / c.max_abs();
        worst = worst.max(diff);
        names.push(format!("{name} {diff:.1e}"));
    }
    check(worst <= 1e-10, format!("max relative entry difference {} (bound 1e-10)", names.join(", ")))
}

fn eigen_contract() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["sphere", "2d_a"] {
        let b = precompute_from_file(&config(name)).unwrap();
        let mesh = bundle_mesh(&b).unwrap();
        let frames = build_face_frames(&mesh).unwrap();
        let tensors = |t: &[[f64; 4]]| t.iter().map(|m| Matrix2::new(m[0], m[1], m[2], m[3])).collect::<Vec<_>>();
        for (set, t) in [(&b.modes_u, &b.tensors_major), (&b.modes_w, &b.tensors_minor)] {
            let l = assemble_stiffness(&mesh, &frames, &tensors(t));
            for (lam, u) in set.eigenvalues.iter().zip(&set.vectors) {
                worst = worst.max(relative_residual(&l, &b.mass, *lam, u));
            }
        }
    }
    let (len, h) = (2.0, 1.0);
    let mesh = primitives::grid(64, 64, len, h);
    let frames = build_face_frames(&mesh).unwrap();
    let l = assemble_isotropic(&mesh, &frames);
    let mass = assemble_mass(&mesh, MassLumping::Barycentric);
    let modes = solve_modes(&l, &mass, &mesh.vertex_components(), 3, &EigenOptions::default()).unwrap();
    for (lam, u) in modes.eigenvalues.iter().zip(&modes.vectors) {
        worst = worst.max(relative_residual(&l, &mass, *lam, u));
    }
    let exact = (std::f64::consts::PI / len).powi(2);
    let rel = (modes.eigenvalues[0] - exact).abs() / exact;
    check(
        worst <= RESIDUAL_TOLERANCE && rel <= 0.05,
        format!("max residual {worst:.1e} (bound 1e-6); flat 2x1 rectangle 64x64 λ1 {:.5} vs (π/L)² {exact:.5}, rel {rel:.2e} (bound 5%)", modes.eigenvalues[0]),
    )
}

fn remap_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa22);
    let (mut spectrum, mut product, mut scale): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut anisotropic = 0;
    for _ in 0..10_000 {
        let (a, b, c) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let m = Matrix2::new(a, b, b, c);
        let r: f64 = rng.random_range(1.0..1e4);
        let ts = TangentStress::new(m);
        let iso = classify(&ts, 1e-3, 0.0);
        let (s1, s2) = remap(&ts, iso, r);
        let want = if iso { [1.0, 1.0] } else { [1.0, r] };
        for s in [s1, s2] {
            let e = SymmetricEigen::new(s).eigenvalues;
            let (lo, hi) = (e[0].min(e[1]), e[0].max(e[1]));
            spectrum = spectrum.max(((lo - want[0]).abs()).max((hi - want[1]).abs()) / r);
        }
        if !iso {
            anisotropic += 1;
            product = product.max((s1 * s2 - Matrix2::identity() * r).norm() / r);
        }
        let k: f64 = if rng.random() { rng.random_range(1e-6..1e6) } else { -rng.random_range(1e-6..1e6) };
        let settings = AnisotropySettings { r, stress_floor: StressFloor::Absolute(0.0), ..Default::default() };
        let x = diffusion_tensors(&[ts], &settings);
        let y = diffusion_tensors(&[TangentStress::new(m * k)], &settings);
        if x.isotropic != y.isotropic {
            scale = f64::INFINITY;
        }
        scale = scale.max((x.major[0] - y.major[0]).norm().max((x.minor[0] - y.minor[0]).norm()) / r);
    }
    check(
        spectrum <= 1e-9 && product <= 1e-9 && scale <= 1e-9,
        format!("10^4 tensors ({anisotropic} anisotropic): spectrum err {spectrum:.1e}, σ′σ″−rI err {product:.1e}, scale err {scale:.1e} (relative to r)"),
    )
}

fn extraction_soundness() -> Outcome {
    let sphere = precompute_from_file(&config("sphere")).unwrap();
    let mut euclid_cfg = config("sphere");
    euclid_cfg.normalization = Normalization::Euclidean;
    let sphere_euclid = precompute_from_file(&euclid_cfg).unwrap();
    let bar_a = precompute_from_file(&config("2d_a")).unwrap();
    let bar_c = precompute_from_file(&config("2d_c")).unwrap();
    let cases: [(&str, &SessionBundle, StripeParams); 5] = [
        ("teaser/sphere", &sphere, row("teaser")),
        ("teaser/sphere euclidean", &sphere_euclid, row("teaser")),
        ("showcase f/sphere", &sphere, row("showcase f")),
        ("2d a/bar", &bar_a, row("2d a")),
        ("camel c/bar", &bar_c, row("camel c")),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, bundle, params) in cases {
        let out = extract_structure(bundle, params, None).unwrap();
        let field = stripe_field(bundle, params).unwrap();
        let mesh = bundle_mesh(bundle).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let impure =
            (0..out.face_count()).filter(|&f| (0..10).any(|_| !out.indicator(f, random_barycentric(&mut rng)))).count();
        let mc = coverage(&mesh, &field, 400_000, 11) * mesh.total_area();
        let rel = (out.area() - mc).abs() / mc.max(f64::MIN_POSITIVE);
        let pass = impure == 0 && rel <= 0.02 && out.face_count() > 0;
        ok &= pass;
        parts.push(format!(
            "{name}: {} tris, coverage {:.3}, impure {impure}, area err {:.2}%",
            out.face_count(),
            out.area() / mesh.total_area(),
            100.0 * rel
        ));
    }
    check(ok, parts.join("; "))
}

fn alignment_direction() -> Outcome {
    let bundle = precompute_from_file(&config("2d_a")).unwrap();
    let a = alignment(&bundle, row("2d a").a).unwrap();
    check(
        a.to_major < 45.0 && a.to_major < a.to_minor,
        format!(
            "cantilever over {} anisotropic faces: {:.1}° to major, {:.1}° to minor (bound 45°)",
            a.faces, a.to_major, a.to_minor
        ),
    )
}

fn compliance_direction() -> Outcome {
    let cfg = config("sphere");
    let bundle = precompute_from_file(&cfg).unwrap();
    let mesh = bundle_mesh(&bundle).unwrap();
    let iso = isotropic_modes(&bundle).unwrap();
    let teaser = row("teaser");
    let mut wins = 0;
    let mut matched = true;
    let mut parts = Vec::new();
    for m in [0.2, 0.4, 0.6, 0.8] {
        let params = StripeParams { m_u: m, m_w: m, ..teaser };
        let aniso = extract_structure(&bundle, params, None).unwrap();
        let target = aniso.area() / mesh.total_area();
        let (iso_out, iso_m) = match_coverage(&mesh, &iso, params, target, 0.005, bundle.config.max_depth).unwrap();
        let iso_cov = iso_out.area() / mesh.total_area();
        let gap = (iso_cov - target).abs() / target;
        matched &= gap <= 0.02;
        let ca = structure_compliance(&mesh, &cfg.material, &cfg.boundary, &aniso).unwrap();
        let ci = structure_compliance(&mesh, &cfg.material, &cfg.boundary, &iso_out).unwrap();
        wins += usize::from(ca < ci);
        parts.push(format!(
            "m {m}: coverage {target:.3}/{iso_cov:.3} (iso m {iso_m:.3}) compliance {ca:.3e} vs {ci:.3e}"
        ));
    }
    check(wins >= 3 && matched, format!("{wins}/4 lower (need 3); {}", parts.join("; ")))
}

fn performance() -> Outcome {
    let mesh = primitives::icosphere(25, 1.0);
    let mut cfg = config("sphere");
    cfg.mesh = None;
    let start = Instant::now();
    let b = precompute(&cfg, &mesh).unwrap();
    let t = start.elapsed().as_secs_f64();
    check(
        t < 60.0,
        format!("{} triangles precomputed in {t:.2} s (stages sum {:.2} s)", mesh.face_count(), b.timings.stage_sum()),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("fem-correctness", Duration::from_secs(10), fem_derivatives),
        ("operator-oracle", Duration::from_secs(5), operator_oracle),
        ("eigen-contract", Duration::from_secs(30), eigen_contract),
        ("remap-laws", Duration::from_secs(5), remap_laws),
        ("extraction-soundness", Duration::from_secs(60), extraction_soundness),
        ("alignment-direction", Duration::from_secs(60), alignment_direction),
        ("compliance-direction", Duration::from_secs(300), compliance_direction),
        ("performance-envelope", Duration::from_secs(60), performance),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) => (elapsed <= limit, d),
            Err(d) => (false, d),
        };
        failures += usize::from(!pass);
        println!(
            "{} {name}: {detail} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
