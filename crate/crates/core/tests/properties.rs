//! Randomised properties of the machine with invariant checking on.

use empa::isa::{assemble, Reg};
use empa::machine::{run_image, RunOptions};
use empa::metrics::alpha_eff;
use empa::programs::{source, with_vector, SumupVariant};
use empa::{SimError, TimingConfig};
use proptest::prelude::*;

fn options(pool: usize) -> RunOptions {
    RunOptions { pool, trace: true, check_invariants: true, ..RunOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modes_agree_and_respect_core_bounds(
        values in prop::collection::vec(any::<u32>(), 1..64),
        pool in 2usize..=40,
    ) {
        let expected = values.iter().fold(0u32, |a, v| a.wrapping_add(*v));
        let t = TimingConfig::default();
        for mode in SumupVariant::ALL {
            let image = assemble(&with_vector(source(mode), &values).unwrap()).unwrap();
            let r = run_image(&image, &t, &options(pool)).unwrap();
            prop_assert_eq!(r.regs.get(Reg::Eax), expected, "{}", mode);
            let k = match mode {
                SumupVariant::No => 1,
                SumupVariant::For => 2,
                SumupVariant::Sumup => (values.len() + 1).min(31).min(pool),
            };
            prop_assert_eq!(r.peak_cores, k, "{} pool {}", mode, pool);
            prop_assert!(r.peak_sumup_children <= 30);
        }
    }

    #[test]
    fn runs_are_deterministic(values in prop::collection::vec(any::<u32>(), 0..20), pool in 1usize..8) {
        let image = assemble(&with_vector(source(SumupVariant::Sumup), &values).unwrap()).unwrap();
        let t = TimingConfig::default();
        let a = run_image(&image, &t, &options(pool.max(1)));
        let b = run_image(&image, &t, &options(pool.max(1)));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn alpha_is_increasing_in_speedup(k in 2usize..64, s in 0.01f64..100.0, ds in 0.001f64..10.0) {
        prop_assert!(alpha_eff(k, s).unwrap() < alpha_eff(k, s + ds).unwrap());
    }

    #[test]
    fn random_fork_trees_keep_invariants(shape in prop::collection::vec(0usize..4, 1..12), pool in 1usize..16) {
        let src = fork_tree(&shape);
        let image = assemble(&src).unwrap();
        match run_image(&image, &TimingConfig::default(), &options(pool)) {
            Ok(r) => prop_assert!(r.peak_cores <= pool),
            Err(SimError::Deadlock { .. }) => prop_assert!(pool < shape.len()),
            Err(e) => prop_assert!(false, "{}\n{}", e, src),
        }
    }
}

/// Node `i` creates the nodes listed as its children (parent of node j>0
/// is `shape[j] % j`), does a little work, waits and terminates. Each node
/// returns 1 plus the sum of its children's results via `%pr`.
fn fork_tree(shape: &[usize]) -> String {
    let n = shape.len();
    let parent = |j: usize| shape[j] % j;
    let mut src = String::new();
    for i in 0..n {
        let kids: Vec<usize> = (1..n).filter(|j| parent(*j) == i).collect();
        src.push_str(&format!("N{i}: irmovl $1, %esi\n"));
        for k in &kids {
            src.push_str(&format!("QCreate N{k}\nQWait\nrrmovl %pr, %ebx\naddl %ebx, %esi\n"));
        }
        src.push_str("rrmovl %esi, %eax\n");
        src.push_str(if i == 0 { "halt\n" } else { "QTerm\n" });
    }
    src
}

#[test]
fn fork_tree_counts_its_nodes() {
    let shape = [0, 0, 1, 1, 2, 7];
    let r = run_image(&assemble(&fork_tree(&shape)).unwrap(), &TimingConfig::default(), &options(8)).unwrap();
    assert_eq!(r.regs.get(Reg::Eax), shape.len() as u32);
}
