//! CSV writers. Reals use Rust's shortest round-trip formatting, rows end
//! with `\n`.

use std::io::{self, BufWriter, Write};

use robin_heat::grid::GridFunction;
use robin_heat::stepping::Trajectory;

/// `x,t,u`, time-major then node index.
pub fn write_surface(traj: &Trajectory, out: &mut dyn Write) -> io::Result<usize> {
    let mut w = BufWriter::new(out);
    w.write_all(b"x,t,u\n")?;
    let mut rows = 0;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        for (k, u) in state.values().iter().enumerate() {
            writeln!(w, "{},{},{}", state.node(k), t, u)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

/// `x,u_inf`.
pub fn write_steady(values: &GridFunction, out: &mut dyn Write) -> io::Result<usize> {
    let mut w = BufWriter::new(out);
    w.write_all(b"x,u_inf\n")?;
    for (k, u) in values.values().iter().enumerate() {
        writeln!(w, "{},{}", values.node(k), u)?;
    }
    w.flush()?;
    Ok(values.values().len())
}
