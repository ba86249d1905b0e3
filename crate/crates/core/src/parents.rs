//! Bundled parent hull fixtures.
//!
//! Three synthetic merchant forms built from an analytic waterline/section
//! family plus the Wigley hull. Their block coefficients span 0.44 to 0.70,
//! the fullness range of the published Series 60 and S175 forms. Real offset
//! tables can replace them through the offset-table file format.

use crate::error::Result;
use crate::geometry::{wigley_grid, HullForm, OffsetGrid, DEFAULT_STATIONS, DEFAULT_WATERLINES};

/// A named parent with its design proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct Parent {
    pub name: &'static str,
    pub grid: OffsetGrid,
    pub length_to_beam: f64,
    pub beam_to_draft: f64,
}

impl Parent {
    pub fn hull(&self, length: f64) -> Result<HullForm> {
        HullForm::new(self.grid.clone(), length, self.length_to_beam, self.beam_to_draft)
    }
}

/// Parameters of the analytic merchant-hull family.
///
/// The waterline envelope is 1 over the parallel middle body
/// `[pmb_aft, pmb_fwd]` (in `ξ = 2x* - 1`) and falls to 0 at the ends as
/// `1 - t^q`, with separate exponents for run and entrance. Sections are
/// `1 - |z*|^p`, with `p` blending linearly from `p_mid` in the middle body
/// to `p_end` at the ends, so sections turn from boxy to V-shaped.
#[derive(Debug, Clone, Copy)]
pub struct MerchantForm {
    pub pmb_aft: f64,
    pub pmb_fwd: f64,
    pub q_run: f64,
    pub q_entrance: f64,
    pub p_mid: f64,
    pub p_end: f64,
}

impl MerchantForm {
    pub fn offset(&self, x: f64, z: f64) -> f64 {
        let xi = 2.0 * x - 1.0;
        let (envelope, blend) = if xi < self.pmb_aft {
            let t = (self.pmb_aft - xi) / (1.0 + self.pmb_aft);
            (1.0 - t.powf(self.q_run), t)
        } else if xi > self.pmb_fwd {
            let t = (xi - self.pmb_fwd) / (1.0 - self.pmb_fwd);
            (1.0 - t.powf(self.q_entrance), t)
        } else {
            (1.0, 0.0)
        };
        let p = self.p_mid + (self.p_end - self.p_mid) * blend;
        (envelope * (1.0 - (-z).powf(p))).max(0.0)
    }

    pub fn grid(&self, n_stations: usize, n_waterlines: usize) -> Result<OffsetGrid> {
        OffsetGrid::from_fn(n_stations, n_waterlines, |x, z| self.offset(x, z))
    }
}

pub const SERIES60_CB060: MerchantForm = MerchantForm {
    pmb_aft: -0.05,
    pmb_fwd: -0.05,
    q_run: 1.84,
    q_entrance: 1.6,
    p_mid: 40.0,
    p_end: 2.0,
};

pub const SERIES60_CB070: MerchantForm = MerchantForm {
    pmb_aft: -0.15,
    pmb_fwd: 0.05,
    q_run: 2.47,
    q_entrance: 2.15,
    p_mid: 70.0,
    p_end: 2.0,
};

pub const CONTAINER_S175: MerchantForm = MerchantForm {
    pmb_aft: -0.1,
    pmb_fwd: -0.1,
    q_run: 1.6,
    q_entrance: 1.42,
    p_mid: 28.0,
    p_end: 1.6,
};

/// Parent names in their canonical order.
pub const PARENT_NAMES: [&str; 4] = ["series60-cb060", "series60-cb070", "s175-container", "wigley"];

pub fn bundled_parents_on(n_stations: usize, n_waterlines: usize) -> Result<Vec<Parent>> {
    Ok(vec![
        Parent {
            name: PARENT_NAMES[0],
            grid: SERIES60_CB060.grid(n_stations, n_waterlines)?,
            length_to_beam: 7.5,
            beam_to_draft: 2.5,
        },
        Parent {
            name: PARENT_NAMES[1],
            grid: SERIES60_CB070.grid(n_stations, n_waterlines)?,
            length_to_beam: 7.0,
            beam_to_draft: 2.5,
        },
        Parent {
            name: PARENT_NAMES[2],
            grid: CONTAINER_S175.grid(n_stations, n_waterlines)?,
            length_to_beam: 6.9,
            beam_to_draft: 2.67,
        },
        Parent {
            name: PARENT_NAMES[3],
            grid: wigley_grid(n_stations, n_waterlines)?,
            length_to_beam: 10.0,
            beam_to_draft: 1.6,
        },
    ])
}

/// The four parents on the default 40 x 20 grid.
pub fn bundled_parents() -> Vec<Parent> {
    bundled_parents_on(DEFAULT_STATIONS, DEFAULT_WATERLINES).expect("fixture grids are valid")
}
