use ppgl_core::envs::EnvName;
use ppgl_core::harness::random_action_baseline;
fn main() {
    for seed in [2000u64, 5000, 9000, 123456] {
        let b = random_action_baseline(EnvName::Reach, 100, seed);
        println!("seed {seed}: mean {:.2} std {:.2} -> (target -2.7) margin/std {:.2}", b.mean, b.std, (-3.15 - b.mean) / b.std);
    }
}
