//! Random instances for property tests and the invariant suite. Every
//! generator takes the RNG explicitly so runs are reproducible from a seed.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::instruments::{luders_instrument, Instrument, KrausOperation};
use crate::matrix::{c, eigh, herm_unitary, ComplexMatrix, C64};
use crate::objects::{Hamiltonian, Povm, State};
use crate::schemes::MeasurementScheme;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ginibre(rng, d, d).hermitian_part()
}

/// `exp(-i H)` for a random Hermitian `H`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    herm_unitary(&random_hermitian(rng, d).scale_real(2.0), 1.0).expect("Hermitian by construction")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> State {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    State::pure(&v).expect("nonzero with probability one")
}

/// Density matrix `G G^dag / tr` of random rank between 1 and `d`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> State {
    let rank = rng.random_range(1..=d);
    let g = ginibre(rng, d, rank);
    State::normalized(&(&g * &g.adjoint()), 1e-9).expect("positive by construction")
}

/// Full-rank density matrix.
pub fn random_full_rank_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> State {
    let g = ginibre(rng, d, d);
    State::normalized(&(&g * &g.adjoint()), 1e-9).expect("positive by construction")
}

pub fn random_hamiltonian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Hamiltonian {
    Hamiltonian::new(random_hermitian(rng, d), 1e-9).expect("Hermitian by construction")
}

pub fn random_energies<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Random point of the probability simplex.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `E_x = S^{-1/2} A_x S^{-1/2}` with `A_x = G_x G_x^dag` and `S = sum A_x`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Povm {
    // The first part is full rank so that S is invertible.
    let parts: Vec<ComplexMatrix> = (0..n)
        .map(|x| {
            let rank = if x == 0 { d } else { rng.random_range(1..=d) };
            let g = ginibre(rng, d, rank);
            &g * &g.adjoint()
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    for a in &parts {
        total += a;
    }
    let inv_sqrt = eigh(&total).expect("Hermitian").map(|l| c(1.0 / l.sqrt(), 0.0));
    let effects = parts.iter().map(|a| (&(&inv_sqrt * a) * &inv_sqrt).hermitian_part()).collect();
    Povm::with_indexed_outcomes(effects, 1e-8).expect("complete by construction")
}

/// Random channel with `r` Kraus operators, from a random isometry.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d: usize, r: usize) -> KrausOperation {
    let w = random_unitary(rng, d * r);
    let kraus = (0..r).map(|k| ComplexMatrix::from_fn(d, d, |a, b| w.get(k * d + a, b))).collect();
    KrausOperation::new(d, d, kraus, 1e-8).expect("isometry blocks")
}

/// How a random pointer instrument acts inside the unit eigenspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerKind {
    /// Lüders instrument of a sharp pointer.
    Luders,
    /// Sharp pointer followed by a random channel inside each block.
    BlockChannel,
    /// `J_x(T) = tr[Z_x T] omega_x` with `omega_x` supported where `Z_x = 1`.
    MeasurePrepare,
}

/// Randomised measurement scheme with a repeatable pointer instrument and a
/// pointer Hamiltonian satisfying the Yanase condition.
#[derive(Debug, Clone)]
pub struct RandomScheme {
    pub scheme: MeasurementScheme,
    pub pointer: Instrument,
    pub kind: PointerKind,
    pub sharp: bool,
    pub h_s: Hamiltonian,
    pub h_a: Hamiltonian,
    pub rho: State,
    /// Pointer effects' unit eigenspaces, as index sets in the rotated basis.
    blocks: Vec<Vec<usize>>,
    rotation: ComplexMatrix,
}

impl RandomScheme {
    /// The Lüders instrument of the pointer, compatible but repeatable only
    /// when the pointer is sharp.
    pub fn luders_pointer(&self) -> Instrument {
        luders_instrument(self.scheme.z()).expect("valid pointer")
    }

    /// `H_A = sum_x e_x Z_x`.
    pub fn pointer_function_hamiltonian(&self, energies: &[f64]) -> Hamiltonian {
        let d = self.scheme.dim_a();
        let mut h = ComplexMatrix::zeros(d, d);
        for (zx, &e) in self.scheme.z().effects().iter().zip(energies) {
            h += &zx.scale_real(e);
        }
        Hamiltonian::new(h, 1e-9).expect("Hermitian")
    }

    /// Another repeatable pointer instrument of the other kinds available
    /// for this pointer.
    pub fn alternative_pointer<R: Rng + ?Sized>(&self, rng: &mut R) -> Instrument {
        let kind = match (self.sharp, self.kind) {
            (false, _) => PointerKind::MeasurePrepare,
            (true, PointerKind::Luders) => PointerKind::BlockChannel,
            (true, _) => PointerKind::Luders,
        };
        build_pointer(rng, kind, self.scheme.z(), &self.blocks, &self.rotation).expect("valid pointer")
    }
}

fn rotate(w: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    &(w * m) * &w.adjoint()
}

fn block_projector(d: usize, block: &[usize]) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d, d);
    for &i in block {
        p.set(i, i, c(1.0, 0.0));
    }
    p
}

fn build_pointer<R: Rng + ?Sized>(
    rng: &mut R,
    kind: PointerKind,
    z: &Povm,
    blocks: &[Vec<usize>],
    w: &ComplexMatrix,
) -> Result<Instrument> {
    let d = z.dim();
    match kind {
        PointerKind::Luders => luders_instrument(z),
        PointerKind::BlockChannel => {
            let ops = blocks
                .iter()
                .map(|block| {
                    let m = block.len();
                    let r = rng.random_range(1..=2);
                    let iso = random_unitary(rng, m * r);
                    let kraus = (0..r)
                        .map(|k| {
                            let mut b = ComplexMatrix::zeros(d, d);
                            for (a, &ia) in block.iter().enumerate() {
                                for (bb, &ib) in block.iter().enumerate() {
                                    b.set(ia, ib, iso.get(k * m + a, bb));
                                }
                            }
                            rotate(w, &b)
                        })
                        .collect();
                    KrausOperation::new(d, d, kraus, 1e-8)
                })
                .collect::<Result<Vec<_>>>()?;
            Instrument::new(z.outcomes().to_vec(), ops, 1e-8)
        }
        PointerKind::MeasurePrepare => {
            let ops = blocks
                .iter()
                .zip(z.effects())
                .map(|(block, zx)| {
                    let local = random_state(rng, block.len());
                    let mut omega = ComplexMatrix::zeros(d, d);
                    for (a, &ia) in block.iter().enumerate() {
                        for (b, &ib) in block.iter().enumerate() {
                            omega.set(ia, ib, local.matrix().get(a, b));
                        }
                    }
                    let omega = rotate(w, &omega);
                    KrausOperation::from_map(d, d, |t| omega.scale((zx * t).trace()))
                })
                .collect::<Result<Vec<_>>>()?;
            Instrument::new(z.outcomes().to_vec(), ops, 1e-8)
        }
    }
}

/// Random scheme on `C^dim_s ⊗ C^dim_a`. The pointer and `H_A` are diagonal in
/// a common random basis, the pointer is unsharp with probability one half
/// when `dim_a >= 3`, and the coupling, apparatus state and input are random.
pub fn random_scheme<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, dim_a: usize) -> Result<RandomScheme> {
    let sharp = dim_a < 3 || rng.random_bool(0.5);
    let n = if sharp {
        rng.random_range(2..=dim_a)
    } else {
        rng.random_range(2..dim_a)
    };
    let mut order: Vec<usize> = (0..dim_a).collect();
    order.shuffle(rng);

    // The first n shuffled indices seed one block each; an unsharp pointer
    // shares one further index among all outcomes.
    let mut blocks: Vec<Vec<usize>> = order[..n].iter().map(|&i| vec![i]).collect();
    let (shared, rest) = if sharp { (None, &order[n..]) } else { (Some(order[n]), &order[n + 1..]) };
    for &i in rest {
        blocks[rng.random_range(0..n)].push(i);
    }
    let weights = random_distribution(rng, n);

    let w = random_unitary(rng, dim_a);
    let effects: Vec<ComplexMatrix> = blocks
        .iter()
        .zip(&weights)
        .map(|(block, &wt)| {
            let mut e = block_projector(dim_a, block);
            if let Some(s) = shared {
                e.set(s, s, c(wt, 0.0));
            }
            rotate(&w, &e)
        })
        .collect();
    let z = Povm::with_indexed_outcomes(effects, 1e-8)?;

    let kind = if !sharp {
        PointerKind::MeasurePrepare
    } else {
        *[PointerKind::Luders, PointerKind::BlockChannel, PointerKind::MeasurePrepare]
            .choose(rng)
            .expect("nonempty")
    };
    let pointer = build_pointer(rng, kind, &z, &blocks, &w)?;

    let h_a = Hamiltonian::new(rotate(&w, &ComplexMatrix::from_real_diagonal(&random_energies(rng, dim_a))), 1e-9)?;
    let xi = random_state(rng, dim_a);
    let u = random_unitary(rng, dim_s * dim_a);
    let scheme = MeasurementScheme::new(dim_s, xi, u, z, 1e-8)?;
    Ok(RandomScheme {
        scheme,
        pointer,
        kind,
        sharp,
        h_s: random_hamiltonian(rng, dim_s),
        h_a,
        rho: random_state(rng, dim_s),
        blocks,
        rotation: w,
    })
}

/// Random block state `sum_i p_i |i><i| ⊗ sigma_i` data: weights, blocks, a
/// diagonal `h1` and a random `h2`.
pub fn random_block_data<R: Rng + ?Sized>(
    rng: &mut R,
    blocks: usize,
    d: usize,
) -> (Vec<f64>, Vec<ComplexMatrix>, Hamiltonian, Hamiltonian) {
    let probs = random_distribution(rng, blocks);
    let sigmas = (0..blocks).map(|_| random_state(rng, d).into_matrix()).collect();
    let h1 = Hamiltonian::diagonal(&random_energies(rng, blocks));
    (probs, sigmas, h1, random_hamiltonian(rng, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{induced_observable, is_repeatable};
    use crate::schemes::check_yanase;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_schemes_meet_their_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let ds = rng.random_range(2..=4);
            let da = rng.random_range(2..=4);
            let rs = random_scheme(&mut rng, ds, da).unwrap();
            assert!(is_repeatable(&rs.pointer, 1e-9).repeatable, "{:?}", rs.kind);
            assert!(induced_observable(&rs.pointer).distance(rs.scheme.z()) < 1e-9);
            assert!(check_yanase(rs.scheme.z(), &rs.h_a, 1e-9).unwrap().holds);
            assert_eq!(rs.sharp, rs.scheme.z().is_sharp(1e-9));
            let alt = rs.alternative_pointer(&mut rng);
            assert!(is_repeatable(&alt, 1e-9).repeatable);
        }
    }

    #[test]
    fn random_povm_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_povm(&mut rng, 3, 4);
        assert!(crate::objects::validate_povm(&p, 1e-9).is_valid());
    }
}
