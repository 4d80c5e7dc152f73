//! `--policy` syntax: `ticket`, `requester:<threshold>:<wake>`,
//! `blocking:<ctx>`, `localspin:<notify>`. A threshold of `inf` never parks.

use lockthrash_core::LockPolicy;

use crate::error::CliError;

pub fn parse_policy(s: &str) -> Result<LockPolicy, CliError> {
    let bad = || CliError::Usage(format!("bad policy '{s}'"));
    let num = |x: &str| x.trim().parse::<u64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["ticket"] => Ok(LockPolicy::Ticket),
        ["requester"] => Ok(LockPolicy::requester()),
        ["requester", t, w] => {
            let threshold = if t.eq_ignore_ascii_case("inf") {
                usize::MAX
            } else {
                num(t)? as usize
            };
            Ok(LockPolicy::RequesterThreshold {
                threshold,
                wake_cost: num(w)?,
            })
        }
        ["blocking"] => Ok(LockPolicy::blocking()),
        ["blocking", c] => Ok(LockPolicy::Blocking { ctx_switch_cost: num(c)? }),
        ["localspin", n] => Ok(LockPolicy::LocalSpin { notify_cost: num(n)? }),
        _ => Err(bad()),
    }
}

pub fn format_policy(p: &LockPolicy) -> String {
    match *p {
        LockPolicy::Ticket => "ticket".into(),
        LockPolicy::RequesterThreshold { threshold, wake_cost } if threshold == usize::MAX => {
            format!("requester:inf:{wake_cost}")
        }
        LockPolicy::RequesterThreshold { threshold, wake_cost } => {
            format!("requester:{threshold}:{wake_cost}")
        }
        LockPolicy::Blocking { ctx_switch_cost } => format!("blocking:{ctx_switch_cost}"),
        LockPolicy::LocalSpin { notify_cost } => format!("localspin:{notify_cost}"),
    }
}
