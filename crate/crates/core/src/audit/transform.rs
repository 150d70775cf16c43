use crate::audit::finite::{FiniteMechanism, ProductDomain};
use crate::error::{Error, Result};

/// Runs two mechanisms independently on the same input and reports both
/// outputs. Output `(y1, y2)` is labelled `y1 * |Y2| + y2`.
pub fn compose_product(first: &FiniteMechanism, second: &FiniteMechanism) -> Result<FiniteMechanism> {
    if first.domain() != second.domain() {
        return Err(Error::Domain(format!(
            "cannot compose mechanisms on {:?} and {:?}",
            first.domain().sizes(),
            second.domain().sizes()
        )));
    }
    let (m1, m2) = (first.outputs(), second.outputs());
    let mut kernel = Vec::with_capacity(first.domain().len() * m1 * m2);
    for x in 0..first.domain().len() {
        for &a in first.row(x) {
            kernel.extend(second.row(x).iter().map(|b| a * b));
        }
    }
    FiniteMechanism::new(first.domain().clone(), m1 * m2, kernel)
}

/// Pushes the output of a mechanism through a deterministic map
/// `y -> map[y]`. The new output set is `{0, .., max(map)}`.
pub fn postprocess(mechanism: &FiniteMechanism, map: &[usize]) -> Result<FiniteMechanism> {
    Error::check_dim(mechanism.outputs(), map.len())?;
    let outputs = map.iter().max().map_or(0, |m| m + 1);
    let mut kernel = vec![0.0; mechanism.domain().len() * outputs];
    for x in 0..mechanism.domain().len() {
        for (y, &p) in mechanism.row(x).iter().enumerate() {
            kernel[x * outputs + map[y]] += p;
        }
    }
    FiniteMechanism::new(mechanism.domain().clone(), outputs, kernel)
}

/// Applies one single-coordinate mechanism to each coordinate independently.
///
/// `factors[j]` must have a one-coordinate input domain; its input size
/// becomes `|X_j|`. Output tuples are labelled in mixed radix, last
/// coordinate fastest.
pub fn coordinatewise(factors: &[FiniteMechanism]) -> Result<FiniteMechanism> {
    if factors.is_empty() {
        return Err(Error::Empty("factors"));
    }
    if let Some(f) = factors.iter().find(|f| f.domain().dim() != 1) {
        return Err(Error::Domain(format!(
            "coordinatewise factors must act on one coordinate, got {:?}",
            f.domain().sizes()
        )));
    }
    let domain = ProductDomain::new(factors.iter().map(|f| f.domain().len()).collect())?;
    let out_domain = ProductDomain::new(factors.iter().map(FiniteMechanism::outputs).collect())?;
    FiniteMechanism::from_fn(domain, out_domain.len(), |x, y| {
        factors
            .iter()
            .enumerate()
            .map(|(j, f)| f.prob(x[j], out_domain.value(y, j)))
            .product()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::levels::{exact_bcdp_levels, exact_cdp_levels, exact_ldp_level};
    use crate::audit::{fixtures, DiscretePrior};
    use crate::mechanisms::rr_kernel;

    #[test]
    fn composing_with_a_constant_mechanism_relabels_only() {
        let m = fixtures::table_mechanism(0.2, 0.6, 0.9).unwrap();
        let constant = FiniteMechanism::from_fn(m.domain().clone(), 1, |_, _| 1.0).unwrap();
        let c = compose_product(&m, &constant).unwrap();
        assert_eq!(c.kernel(), m.kernel());
    }

    #[test]
    fn composition_adds_randomized_response_levels() {
        let a = rr_kernel(3, 0.4).unwrap();
        let b = rr_kernel(3, 1.1).unwrap();
        let c = compose_product(&a, &b).unwrap();
        assert!((exact_ldp_level(&c) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identity_map_changes_nothing() {
        let m = fixtures::xor_mechanism();
        let p = postprocess(&m, &[0, 1, 2, 3]).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn constant_map_erases_everything() {
        let m = fixtures::table_mechanism(0.5, 0.5, 0.5).unwrap();
        let p = postprocess(&m, &[0, 0]).unwrap();
        assert_eq!(exact_ldp_level(&p), 0.0);
        let prior = fixtures::bernoulli_product(2);
        assert_eq!(exact_bcdp_levels(&p, &prior).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn coordinatewise_randomized_response_has_its_budgets_as_cdp() {
        let alphas = [0.3, 0.9, 1.7];
        let factors: Vec<_> = alphas
            .iter()
            .zip([2, 3, 2])
            .map(|(&a, k)| rr_kernel(k, a).unwrap())
            .collect();
        let m = coordinatewise(&factors).unwrap();
        let cdp = exact_cdp_levels(&m);
        for (c, a) in cdp.iter().zip(alphas) {
            assert!((c - a).abs() < 1e-12);
        }
        assert!((exact_ldp_level(&m) - 2.9).abs() < 1e-12);
        // Under an independent prior each coordinate leaks exactly its own budget.
        let prior = DiscretePrior::uniform(m.domain().clone());
        for (l, a) in exact_bcdp_levels(&m, &prior).unwrap().iter().zip(alphas) {
            assert!((l - a).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let a = rr_kernel(2, 1.0).unwrap();
        let b = rr_kernel(3, 1.0).unwrap();
        assert!(compose_product(&a, &b).is_err());
        assert!(postprocess(&a, &[0]).is_err());
        assert!(coordinatewise(&[fixtures::xor_mechanism()]).is_err());
    }
}
