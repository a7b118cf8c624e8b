use crate::model::{kstep_target, EnvironmentField, FieldKind, KStepTarget, Lattice, SelfAvoidingLaw};

use super::{Configuration, Event};

/// An executed jump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub from: usize,
    pub to: usize,
    /// Unwrapped displacement `to - from`.
    pub displacement: i64,
}

/// Update maps `T^{alpha,x,v}` of one environment, with the per-site mark
/// intensity cached.
#[derive(Clone, Debug)]
pub struct Dynamics<'a> {
    env: &'a EnvironmentField,
    inv_rate: f64,
}

impl<'a> Dynamics<'a> {
    pub fn new(env: &'a EnvironmentField) -> Self {
        Self { env, inv_rate: 1.0 / env.mark_rate() }
    }

    pub fn env(&self) -> &'a EnvironmentField {
        self.env
    }

    /// Mark intensity `r*` per site.
    pub fn site_rate(&self) -> f64 {
        1.0 / self.inv_rate
    }

    /// Decides the jump triggered by `(x, v1, v2)` in configuration `occ`,
    /// without modifying it. Jumps whose target lies outside a segment are
    /// discarded; for k-step paths such a position still stops the scan.
    #[inline]
    pub fn transition(&self, occ: &[u8], x: usize, v1: f64, v2: f64) -> Option<Move> {
        let env = self.env;
        let n = occ[x];
        if n == 0 {
            return None;
        }
        let lattice = env.lattice;
        let k = env.capacity;
        match &env.kind {
            FieldKind::Jump(f) => {
                let j = f.envelope.select_index(v1);
                let z = f.envelope.support()[j].0;
                let y = lattice.offset(x, z)?;
                if y == x || v2 >= f.threshold(x, j, n, occ[y]) {
                    return None;
                }
                Some(Move { from: x, to: y, displacement: z })
            }
            FieldKind::KStep(f) => {
                let path = f.law(x).select(v1);
                let KStepTarget { step, site, displacement } = kstep_target(&lattice, occ, k, x, &path.positions);
                let i = step?;
                if v2 >= path.beta[i - 1] * self.inv_rate {
                    return None;
                }
                let y = site?;
                (y != x).then_some(Move { from: x, to: y, displacement })
            }
            FieldKind::Traffic(f) => {
                if v2 >= f.beta[x] * self.inv_rate {
                    return None;
                }
                // Positions off a segment never belong to the candidate set.
                let (_, z) = f.law.first_open(v1, |z| lattice.offset(x, z).is_some_and(|y| occ[y] < k))?;
                let y = lattice.offset(x, z)?;
                (y != x).then_some(Move { from: x, to: y, displacement: z })
            }
        }
    }

    /// Applies the event to `config` in place; returns the executed jump.
    #[inline]
    pub fn apply(&self, config: &mut Configuration, ev: &Event) -> Option<Move> {
        let mv = self.transition(config.occupancy(), ev.x, ev.v1, ev.v2)?;
        config.move_particle(mv.from, mv.to);
        Some(mv)
    }
}

/// `T^{alpha,x,v} eta` as a pure function.
pub fn apply_update(env: &EnvironmentField, config: &Configuration, x: usize, v1: f64, v2: f64) -> Configuration {
    let mut out = config.clone();
    let ev = Event { t: 0.0, x, v1, v2 };
    Dynamics::new(env).apply(&mut out, &ev);
    out
}

/// Direct traffic rate from `x` to `x + z`:
/// `1{eta(x)>0} 1{Z>0} 1{x+z in Theta} beta^1_x upsilon_z / Z`, where
/// `Theta` is the set of non-full sites within overtaking range and `Z` the
/// total weight over `Theta`.
pub fn traffic_direct_rate(env: &EnvironmentField, occ: &[u8], x: usize, z: i64) -> f64 {
    let FieldKind::Traffic(f) = &env.kind else {
        return 0.0;
    };
    traffic_rate_with(&env.lattice, env.capacity, &f.law, f.beta[x], occ, x, z)
}

fn traffic_rate_with(lattice: &Lattice, k: u8, law: &SelfAvoidingLaw, beta: f64, occ: &[u8], x: usize, z: i64) -> f64 {
    if occ[x] == 0 || z == 0 || z.unsigned_abs() as usize > law.k() {
        return 0.0;
    }
    let open = |d: i64| lattice.offset(x, d).is_some_and(|y| occ[y] < k);
    let total: f64 = SelfAvoidingLaw::positions(law.k()).filter(|&d| open(d)).map(|d| law.weight(d)).sum();
    if total <= 0.0 || !open(z) {
        return 0.0;
    }
    beta * law.weight(z) / total
}
