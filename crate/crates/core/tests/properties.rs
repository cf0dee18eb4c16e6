use cvwitness::criteria::{partial_transpose, van_loock_v};
use cvwitness::fock::{tensor_blocks, DensityMatrix, ModeRegister, C64};
use cvwitness::observables::{build_observable_set, CoefficientVector};
use cvwitness::partitions::{enumerate_partitions, Partition};
use cvwitness::witness::{evaluate_witness, WitnessAnalysis};
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn random_mixed(reg: ModeRegister, rank: usize, seed: u64) -> DensityMatrix {
    let n = reg.total_dim();
    let vecs: Vec<Vec<C64>> = (0..rank).map(|k| random_vector(n, seed * 31 + k as u64)).collect();
    let w = 1.0 / rank as f64;
    let m = Mat::from_fn(n, n, |i, j| vecs.iter().map(|v| v[i] * v[j].conj() * w).sum::<C64>());
    DensityMatrix::new(reg, m).unwrap()
}

fn permute_modes(psi: &[C64], reg: &ModeRegister, perm: &[usize]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (i, z) in psi.iter().enumerate() {
        let occ = reg.occupation(i);
        let moved: Vec<usize> = perm.iter().map(|&p| occ[p]).collect();
        out[reg.index_of(&moved).unwrap()] = *z;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_transposes_of_complementary_blocks_are_transposes(seed in 0u64..10_000, rank in 1usize..4, cut in 0usize..3) {
        let reg = ModeRegister::new(3, 2).unwrap();
        let rho = random_mixed(reg, rank, seed);
        let rest: Vec<usize> = (0..3).filter(|&m| m != cut).collect();
        let a = partial_transpose(&rho, &[cut]).unwrap();
        let b = partial_transpose(&rho, &rest).unwrap();
        prop_assert!((a.mat().transpose() - b.mat()).norm_max() < 1e-15);
        prop_assert!(a.hermiticity_error() < 1e-12);
        let full = partial_transpose(&rho, &[0, 1, 2]).unwrap();
        prop_assert!((full.mat() - rho.mat().transpose()).norm_max() < 1e-15);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in 0u64..10_000, rank in 1usize..4) {
        // Products of mixed states stay positive under partial transposition.
        let one = ModeRegister::new(1, 3).unwrap();
        let reg = ModeRegister::new(2, 3).unwrap();
        let (x, y) = (random_mixed(one, rank, seed), random_mixed(one, 2, seed + 7));
        let rho = tensor_blocks(&reg, &[(&[0], &x), (&[1], &y)]).unwrap();
        let once = DensityMatrix::new(reg, partial_transpose(&rho, &[1]).unwrap().mat().to_owned()).unwrap();
        let twice = partial_transpose(&once, &[1]).unwrap();
        prop_assert!((twice.mat() - rho.mat()).norm_max() < 1e-15);
    }

    #[test]
    fn van_loock_ignores_global_phase_and_relabeling(seed in 0u64..10_000, phase in 0.0f64..std::f64::consts::TAU) {
        let reg = ModeRegister::new(3, 3).unwrap();
        let psi = random_vector(reg.total_dim(), seed);
        let base = van_loock_v(&DensityMatrix::from_pure(reg, &psi).unwrap()).unwrap().v;
        let rotated: Vec<C64> = psi.iter().map(|z| z * C64::from_polar(1.0, phase)).collect();
        let v_phase = van_loock_v(&DensityMatrix::from_pure(reg, &rotated).unwrap()).unwrap().v;
        let swapped = permute_modes(&psi, &reg, &[0, 2, 1]);
        let v_swap = van_loock_v(&DensityMatrix::from_pure(reg, &swapped).unwrap()).unwrap().v;
        prop_assert!((base - v_phase).abs() < 1e-10);
        prop_assert!((base - v_swap).abs() < 1e-10);
    }

    #[test]
    fn witness_forms_agree_on_random_inputs(seed in 0u64..10_000, order in 1u8..3) {
        let reg = ModeRegister::new(2, 3).unwrap();
        let rho = random_mixed(reg, 2, seed);
        let set = build_observable_set(&reg, order).unwrap();
        let analysis = WitnessAnalysis::new(&rho, order).unwrap();
        let k = Partition::singletons(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let values: Vec<f64> = (0..set.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let a = set.assemble_generator(&CoefficientVector { order, num_modes: 2, values: values.clone() }).unwrap();
        let direct = evaluate_witness(&rho, &a, &k).unwrap();
        // `rayleigh` normalizes by |c|².
        let quad = analysis.witness(order, &k).unwrap().rayleigh(&values) * values.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((direct - quad).abs() < 1e-8, "{} vs {}", direct, quad);
    }

    #[test]
    fn product_states_have_no_positive_witness_direction(seed in 0u64..10_000) {
        let one = ModeRegister::new(1, 4).unwrap();
        let reg = ModeRegister::new(2, 4).unwrap();
        let a = random_mixed(one, 2, seed);
        let b = DensityMatrix::from_pure(one, &random_vector(4, seed + 1)).unwrap();
        let rho = tensor_blocks(&reg, &[(&[0], &a), (&[1], &b)]).unwrap();
        let analysis = WitnessAnalysis::new(&rho, 2).unwrap();
        let lam = analysis.witness(2, &Partition::singletons(2).unwrap()).unwrap().max_eigenvalue().unwrap();
        prop_assert!(lam <= 1e-8, "{}", lam);
    }

    #[test]
    fn qfi_is_symmetric_and_positive(seed in 0u64..10_000, rank in 1usize..4) {
        let reg = ModeRegister::new(2, 3).unwrap();
        let analysis = WitnessAnalysis::new(&random_mixed(reg, rank, seed), 2).unwrap();
        let q = analysis.qfi(2).unwrap().q;
        prop_assert!((&q - q.transpose()).norm_max() < 1e-12);
        let vals = q.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        prop_assert!(vals[0] > -1e-9 * vals[vals.len() - 1].max(1.0));
    }
}

#[test]
fn partitions_are_canonical_and_complete() {
    let bell = [1, 1, 2, 5, 15, 52, 203];
    for (n, &count) in bell.iter().enumerate().skip(1) {
        let parts = enumerate_partitions(n).unwrap();
        assert_eq!(parts.len(), count);
        let mut seen = std::collections::HashSet::new();
        for p in &parts {
            assert!(seen.insert(p.clone()));
            assert_eq!(p.young_class().0.iter().sum::<usize>(), n);
            let again = Partition::from_labels(&p.labels()).unwrap();
            assert_eq!(&again, p);
        }
    }
}
