//! Seeded random test cases shared by the CLI and the acceptance tests.

use std::f64::consts::{PI, TAU};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::family::{build_family, TangentFamily};
use crate::freeflow::PhasePoint;
use crate::geometry::{ConvexDomain, TildeOmega};
use crate::jet_recovery::check_convexity;
use crate::potential::{Bump, PotentialModel};
use crate::vec2::Vec2;

#[derive(Clone, Debug)]
pub struct SuCase {
    pub domain: ConvexDomain,
    pub q: PotentialModel,
    pub phi: PhasePoint,
}

fn random_domain(rng: &mut ChaCha8Rng) -> Result<ConvexDomain> {
    let c = Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
    if rng.random_bool(0.5) {
        ConvexDomain::circle(c, rng.random_range(0.8..1.4))
    } else {
        ConvexDomain::ellipse(c, [rng.random_range(0.9..1.5), rng.random_range(0.7..1.1)])
    }
}

fn random_potential(rng: &mut ChaCha8Rng, center: Vec2) -> PotentialModel {
    let mut c = || rng.random_range(-0.1..0.1);
    let poly = PotentialModel::polynomial(&[
        ((1, 0), c()),
        ((0, 1), c()),
        ((2, 0), 0.5 * c()),
        ((1, 1), 0.5 * c()),
        ((0, 2), 0.5 * c()),
    ]);
    let bump = Bump {
        center: center + Vec2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)),
        amplitude: rng.random_range(-0.05..0.05),
        width: rng.random_range(0.3..0.6),
    };
    PotentialModel::Sum(vec![poly, PotentialModel::GaussianBumps(vec![bump])])
}

/// Launches from the boundary with `a-` outside, pointing into the domain.
pub fn su_cases(seed: u64, n: usize) -> Result<Vec<SuCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let domain = random_domain(&mut rng)?;
        let q = random_potential(&mut rng, domain.interior_witness());
        let f = domain.frame(rng.random_range(0.0..TAU))?;
        let r = rng.random_range(0.2..0.45);
        // tilt the launch inwards by 20 to 80 degrees
        let psi = -rng.random_range(20.0..80.0) * PI / 180.0;
        let y = f.origin - (f.n * psi.cos() + f.t * psi.sin()) * r;
        out.push(SuCase {
            domain,
            q,
            phi: PhasePoint::new(f.origin, y),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FamilyCase {
    pub domain: ConvexDomain,
    pub q: PotentialModel,
    pub theta: f64,
    pub family: TangentFamily,
}

/// Tangent families on random circles and ellipses with mild potentials,
/// launched at points of the lower boundary arc. Draws where the boundary is
/// not strictly convex w.r.t. Q at the launch point are skipped.
pub fn family_cases(seed: u64, n: usize, margin: f64) -> Result<Vec<FamilyCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let domain = random_domain(&mut rng)?;
        let q = random_potential(&mut rng, domain.interior_witness());
        let theta = -PI / 2.0 + rng.random_range(-0.8..0.8);
        if check_convexity(&q, &domain, theta, 1.0)? >= 0.0 {
            continue;
        }
        let tilde = TildeOmega::new(domain.clone(), margin);
        let p = domain.point(theta)?;
        let family = build_family(&tilde, theta, q.gradient(p), 1.0, 1.0, 0.5, 1.0)?;
        out.push(FamilyCase {
            domain,
            q,
            theta,
            family,
        });
    }
    Ok(out)
}
