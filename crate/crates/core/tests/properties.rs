use std::f64::consts::TAU;
use std::sync::OnceLock;

use greenperturb::disk::DiskGreen;
use greenperturb::domain::{build_disk, build_star, BoundaryPerturbation, TrigSeries};
use greenperturb::field::Poly2;
use greenperturb::greenop::{KernelOperator, QuadratureMesh, DEFAULT_MESH};
use greenperturb::variation::{
    beltrami_delta_grad, beltrami_delta_lap, growth_dgdt_with, hadamard_delta_with, sign_convention_adapter,
    sign_convention_inverse, GreenBackend,
};
use greenperturb::Point;
use proptest::prelude::*;

fn point(r_max: f64) -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..TAU).prop_map(move |(s, t)| Point::from_polar(r_max * s.sqrt(), t))
}

fn speed() -> impl Strategy<Value = BoundaryPerturbation> {
    (0.5..2.0f64, -0.2..0.2f64, -0.2..0.2f64, -0.1..0.1f64)
        .prop_map(|(a0, c1, s1, c2)| BoundaryPerturbation::new(TrigSeries::new(a0, vec![c1, c2], vec![s1])).unwrap())
}

fn disk_backend() -> &'static GreenBackend {
    static B: OnceLock<GreenBackend> = OnceLock::new();
    B.get_or_init(|| GreenBackend::for_domain(&build_disk(1.0).unwrap(), 1.0 / 128.0).unwrap())
}

fn star_backend() -> &'static GreenBackend {
    static B: OnceLock<GreenBackend> = OnceLock::new();
    B.get_or_init(|| {
        let star = build_star(TrigSeries::new(1.0, vec![0.15], vec![0.0, 0.05])).unwrap();
        GreenBackend::numeric(&star, 1.0 / 32.0).unwrap()
    })
}

fn disk_op() -> &'static (QuadratureMesh, KernelOperator) {
    static M: OnceLock<(QuadratureMesh, KernelOperator)> = OnceLock::new();
    M.get_or_init(|| {
        let d = build_disk(1.0).unwrap();
        let (n_s, n_theta) = DEFAULT_MESH;
        (QuadratureMesh::polar(&d, n_s, n_theta).unwrap(), KernelOperator::disk(&d, n_s, n_theta).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hadamard_disk_symmetric_and_negative(p in speed(), z in point(0.9), w in point(0.9)) {
        let b = disk_backend();
        let a = hadamard_delta_with(b, &p, z, w, 512).unwrap().value;
        let r = hadamard_delta_with(b, &p, w, z, 512).unwrap().value;
        prop_assert!(a < 0.0);
        prop_assert!((a - r).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn adapter_scales_by_minus_two_pi(p in speed(), z in point(0.8), w in point(0.8)) {
        let v = hadamard_delta_with(disk_backend(), &p, z, w, 256).unwrap();
        let alt = sign_convention_adapter(v.clone()).unwrap();
        prop_assert!((alt.value + TAU * v.value).abs() <= 1e-12 * alt.value.abs());
        let back = sign_convention_inverse(alt).unwrap();
        prop_assert!((back.value - v.value).abs() <= 1e-15 * v.value.abs().max(1.0));
    }

    #[test]
    fn growth_does_not_depend_on_z(z in point(0.9), radius in 0.5..3.0f64) {
        let d = build_disk(radius).unwrap();
        let b = GreenBackend::for_domain(&d, 1.0 / 64.0).unwrap();
        let v = growth_dgdt_with(&b, None, z * radius, 512).unwrap().value;
        let exact = -1.0 / (TAU * TAU * radius * radius);
        prop_assert!((v / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn beltrami_constant_field_rescales_g(cst in -2.0..2.0f64, z in point(0.85), w in point(0.85)) {
        prop_assume!((z - w).norm() > 0.1);
        let b = disk_backend();
        let (mesh, op) = disk_op();
        let p = Poly2::constant(cst);
        let g = DiskGreen::new(1.0).unwrap().green(z, w).unwrap();
        let lap = beltrami_delta_lap(b, op, &p, z, w).unwrap().value;
        prop_assert!((lap + cst * g).abs() < 1e-12);
        let grad = beltrami_delta_grad(b, &p, z, w, mesh).unwrap().value;
        prop_assert!((grad + cst * g).abs() < 2e-3 * cst.abs().max(0.5), "gap {}", (grad + cst * g).abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hadamard_star_symmetric_and_negative(p in speed(), z in point(0.55), w in point(0.55)) {
        prop_assume!((z - w).norm() > 0.1);
        let b = star_backend();
        let a = hadamard_delta_with(b, &p, z, w, 256).unwrap().value;
        let r = hadamard_delta_with(b, &p, w, z, 256).unwrap().value;
        prop_assert!(a < 0.0);
        prop_assert!((a - r).abs() <= 1e-12 * a.abs());
    }
}
