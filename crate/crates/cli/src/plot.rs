//! Lower/upper/oracle envelope series for external plotting.

use clap::Subcommand;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use robp::bounds::{lb_small_w, min_consistent_width};
use robp::constructions::{tribes_delta, RoundingPlan};
use robp::exact::{int, rational_to_f64};
use robp::oracle::frontier;
use robp::{Budgets, Error, Surd};

#[derive(Subcommand, Debug)]
pub enum Envelope {
    /// Error of binary counting against width, at fixed length.
    SmallW {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        w_min: usize,
        #[arg(long)]
        w_max: usize,
    },
    /// Width of k-letter counting against error, at fixed length.
    SmallErr {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        delta_min: u64,
        #[arg(long)]
        delta_max: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub series: &'static str,
    pub x: f64,
    pub y: f64,
}

/// Best known upper bound on the error of a width-`w` binary counter.
fn small_w_upper(n: usize, w: usize) -> Surd {
    if w > n {
        Surd::from(0)
    } else if w >= 3 && 10 * w <= n {
        tribes_delta(n, w)
    } else {
        Surd::from(BigRational::new(n.into(), 2.into()))
    }
}

pub fn sweep(envelope: &Envelope, budgets: &Budgets) -> Result<Vec<Point>, Error> {
    let mut points = Vec::new();
    match *envelope {
        Envelope::SmallW { n, w_min, w_max } => {
            for w in w_min.max(1)..=w_max {
                let x = w as f64;
                let lower = if w > n { int(0) } else { lb_small_w(n, 2, w as u64)? };
                points.push(Point { series: "lower_bound", x, y: rational_to_f64(&lower) });
                points.push(Point { series: "upper_bound", x, y: small_w_upper(n, w).to_f64() });
                match frontier(n, w, budgets) {
                    Ok(p) => points.push(Point { series: "oracle", x, y: rational_to_f64(&p.delta_star) }),
                    Err(Error::Budget { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Envelope::SmallErr { n, k, delta_min, delta_max } => {
            for d in delta_min..=delta_max {
                let delta = int(d);
                let x = d as f64;
                let lower = min_consistent_width(n, k, &Surd::from(&delta))?;
                let upper: BigUint = RoundingPlan::new(n, k, &delta)?.width_bound();
                points.push(Point { series: "lower_bound", x, y: lower as f64 });
                points.push(Point { series: "upper_bound", x, y: upper.to_f64().unwrap_or(f64::INFINITY) });
            }
        }
    }
    points.sort_by(|a, b| a.series.cmp(b.series).then(a.x.total_cmp(&b.x)));
    Ok(points)
}

/// `series,x,y` rows with a header line.
pub fn emit_plot_data(points: &[Point]) -> Result<String, Error> {
    if points.is_empty() {
        return Err(Error::Precondition("empty sweep".into()));
    }
    let mut out = String::from("series,x,y\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.series, p.x, p.y));
    }
    Ok(out)
}
