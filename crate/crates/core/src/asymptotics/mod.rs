//! Concentration asymptotics: curvature-weight conditions, bubble profiles,
//! glued test functions, energy expansions, lower bounds and the end-to-end
//! existence certificate.

pub mod bubble;
pub mod certificate;
pub mod conditions;
pub mod expansion;
pub mod testfn;

pub use bubble::{bubble_field, scale_rule_l, BubbleSpec};
pub use certificate::{certificate, CertificateConfig, CertificateReport};
pub use conditions::{djlw_check, neck_bound, pohozaev_admissible, DjlwReport};
pub use expansion::{lower_bound_full, lower_bound_partial, ExpansionReport, Terms};
pub use testfn::{build_full, build_partial, TestFunctionFull, TestFunctionPartial};
