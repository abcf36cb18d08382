// scratch parameter survey (not part of the test suite)
use vmkit_core::dispersion::{count_unstable_roots, find_root, instability_cutoff_k, Rect};
use vmkit_core::equilibria::{make_profile, marginalize, penrose_report, ProfileKind};

fn main() {
    let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 0.6, tilt: 0.0 }, 1).unwrap();
    let m = marginalize(&p, &[1.0]).unwrap();
    let rep = penrose_report(&m).unwrap();
    println!("I = {:?}", rep.max_integral());
    println!("kc = {:?}", instability_cutoff_k(&m));
    let m_box = 16.0;
    for n in 1..=3 {
        let k = n as f64 * 2.0 * std::f64::consts::PI / m_box;
        match find_root(&m, k, None) {
            Ok(r) => println!(
                "k{n} = {k:.6}: omega = {:.8}+{:.8}i lambda = {:.8}  residual {:.2e}",
                r.omega0.re, r.omega0.im, r.lambda0.re, r.residual
            ),
            Err(e) => println!("k{n} = {k:.6}: {e}"),
        }
        if let Ok(c) = count_unstable_roots(&m, k, Rect::standard()) {
            println!("   winding count = {c}");
        }
    }
}
