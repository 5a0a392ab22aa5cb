//! Python bindings for the core odd-degree CM torsion operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cmtor::bounds::{self, StratumKind, TailParams};
use cmtor::census;
use cmtor::classnum::batch_class_numbers;
use cmtor::density;
use cmtor::numtheory::decimal_truncate;
use cmtor::odt::{self, TorsionGroup};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Torsion groups realized in odd degree d, as display strings.
#[pyfunction]
fn groups(d: u64) -> PyResult<Vec<String>> {
    let gs = odt::groups_on_demand(d).map_err(err)?;
    Ok(gs.iter().map(|g| g.to_string()).collect())
}

/// T_CM(d): the largest torsion order in odd degree d.
#[pyfunction]
fn t_cm(d: u64) -> PyResult<u64> {
    odt::t_cm_on_demand(d).map_err(err)
}

/// Class number of Q(sqrt(-ell)) for a prime ell = 3 (mod 4).
#[pyfunction]
fn class_number(ell: u64) -> PyResult<u64> {
    cmtor::classnum::class_number(ell).map_err(err)
}

/// Divisibility threshold of Z/ell^n Z (or Z/2ell^n Z with two_times=True).
#[pyfunction]
#[pyo3(signature = (ell, n, two_times = false))]
fn threshold(ell: u64, n: u32, two_times: bool) -> PyResult<u64> {
    let group = if two_times {
        TorsionGroup::TwoTimesCyclic { ell, n }
    } else {
        TorsionGroup::Cyclic { ell, n }
    };
    let need = 2 * ell + 1;
    let cache = batch_class_numbers(need).map_err(err)?;
    Ok(odt::threshold(group, &cache).map_err(err)?.value)
}

/// Canonical fingerprint string of d's realized set ("" for Olson degrees).
#[pyfunction]
fn fingerprint(d: u64) -> PyResult<String> {
    let gs = odt::groups_on_demand(d).map_err(err)?;
    Ok(odt::fingerprint_of(&gs).canonical_string())
}

#[pyfunction]
fn is_olson(d: u64) -> PyResult<bool> {
    Ok(fingerprint(d)?.is_empty())
}

/// r(d): the number of divisors of d of the form (ell-1)/2 * h(-ell).
#[pyfunction]
fn r_count(d: u64) -> PyResult<u64> {
    let cache = batch_class_numbers(2 * d + 1).map_err(err)?;
    odt::r_count(d, &cache).map_err(err)
}

/// delta(ell, n): the exponent of ell in the threshold.
#[pyfunction]
fn delta(ell: u64, n: u32) -> PyResult<u32> {
    odt::delta(ell, n).map_err(err)
}

/// Exact upper bound on the Olson-degree density, truncated to 15 digits.
#[pyfunction]
#[pyo3(signature = (limit = 100_000, take = 38))]
fn olson_upper(limit: u64, take: usize) -> PyResult<String> {
    let cache = batch_class_numbers(2 * limit + 1).map_err(err)?;
    let upper = density::olson_density_interval_upper(limit, take, &cache).map_err(err)?;
    Ok(decimal_truncate(&upper, 15))
}

/// Exact density of the set of multiples of `elements` among all integers.
#[pyfunction]
fn multiples_density(elements: Vec<u64>) -> PyResult<String> {
    let h = density::MultiplesSet::new(elements).map_err(err)?;
    let d = density::density_of_multiples(&h);
    Ok(format!("{}/{}", d.numer(), d.denom()))
}

/// The d <= dmax table of realized groups (paper-style labels).
#[pyfunction]
fn table(dmax: u64) -> PyResult<String> {
    let cache = batch_class_numbers(2 * dmax + 1).map_err(err)?;
    census::table(dmax, &cache).map_err(err)
}

/// (d*, group count) maximizing #G_CM over odd degrees in [lo, hi].
#[pyfunction]
fn max_group_count(lo: u64, hi: u64) -> PyResult<(u64, u32)> {
    let cache = batch_class_numbers(2 * hi + 1).map_err(err)?;
    census::max_group_count(lo, hi, &cache).map_err(err)
}

/// Partial sum Σ 1/g_ℓ (gcd(g_ℓ,30) = 1) up to the cutoff, as a float.
#[pyfunction]
fn sum1_partial(cutoff: u64) -> PyResult<f64> {
    let cache = batch_class_numbers(cutoff).map_err(err)?;
    let s = bounds::sum1_partial(cutoff, &cache).map_err(err)?;
    // the exact sum keeps an unreduced denominator too large for direct f64
    // conversion; go through the truncated decimal expansion
    decimal_truncate(&s, 17).parse().map_err(err)
}

/// Certified density interval of the d-Olson stratum as decimal strings.
/// Heavy: loads class numbers up to TailParams' explicit regime (10^8).
#[pyfunction]
#[pyo3(signature = (d, z = 32_927))]
fn stratum_interval(d: u64, z: u64) -> PyResult<(String, String)> {
    let params = TailParams::default();
    let cache = batch_class_numbers((2 * z + 1).max(params.l0)).map_err(err)?;
    let kind = StratumKind::for_degree(d);
    let tails = census::kind_tails(&[kind], z, params, &cache).map_err(err)?;
    let iv = density::stratum_density(density::StratumQuery { d, z }, &cache, &tails[&kind])
        .map_err(err)?;
    Ok((decimal_truncate(&iv.lower, 15), decimal_truncate(&iv.upper, 15)))
}

#[pymodule]
fn cmtor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(groups, m)?)?;
    m.add_function(wrap_pyfunction!(t_cm, m)?)?;
    m.add_function(wrap_pyfunction!(class_number, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fingerprint, m)?)?;
    m.add_function(wrap_pyfunction!(is_olson, m)?)?;
    m.add_function(wrap_pyfunction!(r_count, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(olson_upper, m)?)?;
    m.add_function(wrap_pyfunction!(multiples_density, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(max_group_count, m)?)?;
    m.add_function(wrap_pyfunction!(sum1_partial, m)?)?;
    m.add_function(wrap_pyfunction!(stratum_interval, m)?)?;
    Ok(())
}
