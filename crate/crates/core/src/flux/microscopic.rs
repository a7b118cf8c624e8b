use crate::model::{kstep_target, EnvironmentField, FieldKind, SelfAvoidingLaw};

/// Microscopic flux `j~(x)`: the expected signed displacement rate of the
/// particles leaving `x`.
///
/// * jump families: `sum_z z B(x, z, eta(x), eta(x+z))`;
/// * k-step: `1{eta(x)>0} E_{q_x}[beta^N (Y - x)]`, by exact enumeration of
///   the path law;
/// * traffic: `beta^1_x 1{eta(x)>0} Z^{-1} sum_z z upsilon_z 1{eta(x+z)<K}`.
///
/// Jumps leaving a segment contribute nothing.
pub fn microscopic_flux(env: &EnvironmentField, occ: &[u8], x: usize) -> f64 {
    let n = occ[x];
    if n == 0 {
        return 0.0;
    }
    let lattice = env.lattice;
    let k = env.capacity;
    match &env.kind {
        FieldKind::Jump(f) => {
            let table = f.rate_table(x);
            let s = f.support_len();
            let w = &f.weights[x * s..(x + 1) * s];
            let mut sum = 0.0;
            for (j, &(z, _)) in f.envelope.support().iter().enumerate() {
                if let Some(y) = lattice.offset(x, z) {
                    if y != x {
                        sum += z as f64 * w[j] * table.rate(n, occ[y]);
                    }
                }
            }
            sum
        }
        FieldKind::KStep(f) => {
            let mut sum = 0.0;
            for (path, q) in f.law(x).iter() {
                let t = kstep_target(&lattice, occ, k, x, &path.positions);
                if let (Some(i), Some(_)) = (t.step, t.site) {
                    sum += q * path.beta[i - 1] * t.displacement as f64;
                }
            }
            sum
        }
        FieldKind::Traffic(f) => {
            let mut total = 0.0;
            let mut moment = 0.0;
            for z in SelfAvoidingLaw::positions(f.k) {
                if lattice.offset(x, z).is_some_and(|y| occ[y] < k) {
                    let w = f.law.weight(z);
                    total += w;
                    moment += z as f64 * w;
                }
            }
            if total > 0.0 {
                f.beta[x] * moment / total
            } else {
                0.0
            }
        }
    }
}

/// Displacements `d` such that `j~(x)` reads `eta(x + d)`, including 0.
pub fn flux_stencil(env: &EnvironmentField) -> Vec<i64> {
    let mut d: Vec<i64> = match &env.kind {
        FieldKind::Jump(f) => f.envelope.support().iter().map(|&(z, _)| z).collect(),
        FieldKind::KStep(f) => f.laws.iter().flat_map(|l| l.offsets()).collect(),
        FieldKind::Traffic(f) => SelfAvoidingLaw::positions(f.k).collect(),
    };
    d.push(0);
    d.sort_unstable();
    d.dedup();
    d
}
