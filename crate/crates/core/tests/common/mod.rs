#![allow(dead_code)]

use nlddm_core::assembly::{assemble_full, build_rhs, FullSystem, Interactions, LoadData, Rhs};
use nlddm_core::decomposition::{partition_blocks, CollarPolicy, Decomposition};
use nlddm_core::field::ScalarField;
use nlddm_core::kernel::{KernelFamily, KernelSpec, Truncation};
use nlddm_core::mesh::{build_frame_mesh, Mesh};

pub const DELTA: f64 = 0.25;
pub const QUAD: usize = 4;

pub struct Setup {
    pub mesh: Mesh,
    pub kernel: KernelSpec,
    pub inter: Interactions,
    pub sys: FullSystem,
}

pub fn setup(h: f64, family: KernelFamily) -> Setup {
    let mesh = build_frame_mesh(1.0, h, DELTA).unwrap();
    let kernel = KernelSpec::new(family, DELTA, 1.0, Truncation::BarycenterPair).unwrap();
    let inter = Interactions::compute(&mesh, &kernel, QUAD).unwrap();
    let sys = assemble_full(&mesh, &inter, None, QUAD).unwrap();
    Setup { mesh, kernel, inter, sys }
}

pub fn desk() -> Setup {
    setup(0.125, KernelFamily::Constant)
}

pub fn decompose(s: &Setup, b: usize, policy: CollarPolicy) -> Decomposition {
    let p = partition_blocks(&s.mesh, b, b).unwrap();
    let mut d = Decomposition::build_with(&s.mesh, p, DELTA, policy).unwrap();
    d.verify(&s.mesh, s.inter.pairs()).unwrap();
    d
}

pub const F: ScalarField = ScalarField::Sinusoidal { amplitude: 1.0 };
pub const G: ScalarField = ScalarField::Linear { a: 0.5, b: -0.25, c: 1.0 };

pub fn load() -> LoadData<'static> {
    LoadData { f: &F, g: &G }
}

pub fn rhs(s: &Setup) -> Rhs {
    build_rhs(&s.mesh, &load(), &s.sys.g_coupling, QUAD).unwrap()
}
