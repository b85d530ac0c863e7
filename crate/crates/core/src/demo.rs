//! The bundled two-hole demo domain and a fixed vertex set for it.

use crate::geom::Domain;
use crate::io::{load_domain_file, load_scenario, DomainFile, DomainSource, ScenarioFile};

pub const DOMAIN_FILE_NAME: &str = "two_holes.mdp.json";
pub const DOMAIN_TEXT: &str = include_str!("../data/two_holes.mdp.json");
pub const SCENARIO_TEXT: &str = include_str!("../data/two_holes_demo.mdp.json");

pub fn domain_file() -> DomainFile {
    load_domain_file(DOMAIN_TEXT).expect("bundled domain is valid")
}

pub fn domain() -> Domain {
    domain_file().domain
}

/// Demo scenario with its domain inlined. Its vertices cover the domain at
/// `s = 0.06` but not at `s = 0.04`.
pub fn scenario() -> ScenarioFile {
    let mut sc = load_scenario(SCENARIO_TEXT).expect("bundled scenario is valid");
    debug_assert_eq!(sc.domain, DomainSource::Path(DOMAIN_FILE_NAME.into()));
    sc.domain = DomainSource::Inline(domain_file());
    sc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{certify_cover, default_tolerance, CoverStatus};

    #[test]
    fn demo_radius_threshold() {
        let d = domain();
        assert_eq!(d.holes().len(), 2);
        let sc = scenario();
        let tol = default_tolerance(&d);
        let lo = certify_cover(&d, &sc.centers, 0.04, tol).unwrap();
        assert_eq!(lo.status, CoverStatus::Uncovered);
        let hi = certify_cover(&d, &sc.centers, sc.s, tol).unwrap();
        assert_eq!(hi.status, CoverStatus::Covered);
    }
}
