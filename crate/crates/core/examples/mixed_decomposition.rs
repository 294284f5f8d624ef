// Block-diagonal coordinates for a mixed-case model: double-integrator
// chains, single integrators and harmonic modes, recovered after a random
// change of basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satsync::agent::{self, MixedDecomposition};
use satsync::linalg::{self, Matrix};
use satsync::presets;

pub fn run_example() -> satsync::Result<Vec<MixedDecomposition>> {
    let model = presets::example2_model();
    let published = agent::mixed_decompose(model.a(), model.b(), model.c(), agent::DEFAULT_TOL)?;
    println!("published model: Γₓ = I is {}", published.gamma_x == Matrix::identity(7, 7));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = Matrix::from_fn(7, 7, |i, j| (if i == j { 2.0 } else { 0.0 }) + rng.gen_range(-0.5..0.5));
    let s_inv = linalg::inverse(&s)?;
    let a = &s * model.a() * &s_inv;
    let b = &s * model.b();
    let c = model.c() * &s_inv;
    let hidden = agent::mixed_decompose(&a, &b, &c, agent::DEFAULT_TOL)?;
    println!(
        "transformed model: partition {:?}, ω = {:?}, residual ‖ΓₓAΓₓ⁻¹ − Ã‖ = {:.3e}",
        hidden.partition(),
        hidden.omegas,
        hidden.residual(&a)
    );
    println!("Ã =\n{:.3}", hidden.a_tilde);
    Ok(vec![published, hidden])
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
