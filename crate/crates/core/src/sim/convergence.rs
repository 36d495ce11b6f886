use super::Role;
use crate::trust::TrustState;

/// First epoch `e` from which the trace stays in the role's target band for
/// `k_stable` consecutive epochs: at or above `trusted` for honest nodes, at
/// or below `untrusted` for malicious ones.
pub fn detect_convergence(
    trace: &[TrustState],
    role: Role,
    trusted: f64,
    untrusted: f64,
    k_stable: u32,
) -> Option<u32> {
    let k = k_stable.max(1) as usize;
    let in_band = |s: &TrustState| {
        if role.is_malicious() {
            s.at_most(untrusted)
        } else {
            s.at_least(trusted)
        }
    };
    let mut run = 0usize;
    for (t, s) in trace.iter().enumerate() {
        if in_band(s) {
            run += 1;
            if run == k {
                return Some((t + 1 - k) as u32);
            }
        } else {
            run = 0;
        }
    }
    None
}
