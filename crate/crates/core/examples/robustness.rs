//! Parse a formula and evaluate its robustness on a small signal.
//!
//! cargo run --example robustness

use stlclass::signal::Signal;
use stlclass::stl::{parse, robustness, Monitor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = "time,speed,RPM\n0,10,1500\n1,40,2800\n2,75,3900\n3,95,4200\n4,60,3000\n";
    let w = Signal::parse_csv(csv)?;
    for text in [
        "G[0,4](speed < 100)",
        "G[0,4](speed < 90 && RPM < 4000)",
        "F[0,4](speed > 70 && RPM > 3800)",
        "speed < 90 U[0,4] RPM > 4000",
    ] {
        let phi = parse(text)?;
        let rho = robustness(&w, &phi)?;
        println!("{phi:<40} rho = {rho:>8}  {:?}", rho.verdict());
    }

    // a compiled monitor can be reused across signals
    let m = Monitor::new(&parse("G[0,2](speed < 50)")?, w.variables())?;
    for t in [0.0, 1.0, 2.0] {
        println!("shifted by {t}: {}", m.robustness(&w.shift(t)?)?);
    }
    Ok(())
}
