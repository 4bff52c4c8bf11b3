//! Differential tests: single-core runs against the separate reference
//! interpreter, on random programs and on the vector-sum program.

mod support;

use empa::cpu::ConditionCodes;
use empa::isa::{assemble, Reg};
use empa::machine::{run_image, RunOptions};
use empa::programs::{source, with_vector, SumupVariant};
use empa::TimingConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::reference;

const REGS: [&str; 6] = ["%eax", "%ecx", "%edx", "%ebx", "%esi", "%edi"];
const CONDS: [&str; 7] = ["mp", "le", "l", "e", "ne", "ge", "g"];
const ALU: [&str; 4] = ["addl", "subl", "andl", "xorl"];

/// Random straight-line program with forward branches, a subroutine and a
/// balanced stack. `%esp` and `%ebp` are reserved for the stack and data.
fn random_program(rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut src = String::from("irmovl $0x8000, %esp\nirmovl data, %ebp\n");
    let mut depth = 0;
    let r = |rng: &mut ChaCha8Rng| REGS[rng.gen_range(0..REGS.len())];
    for i in 0..len {
        let line = match rng.gen_range(0..11) {
            0 => format!("irmovl ${}, {}", rng.gen::<u32>(), r(rng)),
            1 => format!("rrmovl {}, {}", r(rng), r(rng)),
            2 => format!("cmov{} {}, {}", CONDS[rng.gen_range(1..7)], r(rng), r(rng)),
            3 | 4 => format!("{} {}, {}", ALU[rng.gen_range(0..4)], r(rng), r(rng)),
            5 => format!("iaddl ${}, {}", rng.gen::<i32>(), r(rng)),
            6 => format!("rmmovl {}, {}(%ebp)", r(rng), 4 * rng.gen_range(0..16)),
            7 => format!("mrmovl {}(%ebp), {}", 4 * rng.gen_range(0..16), r(rng)),
            8 => {
                depth += 1;
                format!("pushl {}", r(rng))
            }
            9 if depth > 0 => {
                depth -= 1;
                format!("popl {}", r(rng))
            }
            9 => "call Sub".to_string(),
            _ => format!("j{} F{i}\nnop\nF{i}:", CONDS[rng.gen_range(0..7)]),
        };
        src.push_str(&line);
        src.push('\n');
    }
    src.push_str("halt\nSub: iaddl $1, %edi\nret\n.align 4\ndata:\n");
    for _ in 0..16 {
        src.push_str(&format!(".long {}\n", rng.gen::<u32>()));
    }
    src
}

fn compare(src: &str) -> Result<(), TestCaseError> {
    let image = assemble(src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
    let sim = run_image(&image, &TimingConfig::default(), &RunOptions { pool: 1, ..RunOptions::default() })
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let oracle = reference::run(&image.flat_bytes(), image.entry, &reference::default_costs(), 100_000)
        .map_err(TestCaseError::fail)?;
    for (i, r) in Reg::ARCHITECTURAL.iter().enumerate() {
        prop_assert_eq!(sim.regs.get(*r), oracle.regs[i], "register {} in\n{}", r, src);
    }
    prop_assert_eq!(sim.cc, ConditionCodes { zf: oracle.zf, sf: oracle.sf, of: oracle.of });
    prop_assert!(sim.memory.as_bytes() == &oracle.mem[..], "memory differs");
    prop_assert_eq!(sim.clocks, oracle.clocks, "clocks in\n{}", src);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_programs_agree_with_reference(seed in any::<u64>(), len in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        compare(&random_program(&mut rng, len))?;
    }

    #[test]
    fn vector_sum_agrees_with_reference(values in prop::collection::vec(any::<u32>(), 0..64)) {
        compare(&with_vector(source(SumupVariant::No), &values).unwrap())?;
        let expected = values.iter().fold(0u32, |a, v| a.wrapping_add(*v));
        let image = assemble(&with_vector(source(SumupVariant::No), &values).unwrap()).unwrap();
        let oracle = reference::run(&image.flat_bytes(), image.entry, &reference::default_costs(), 100_000).unwrap();
        prop_assert_eq!(oracle.regs[0], expected);
    }
}
