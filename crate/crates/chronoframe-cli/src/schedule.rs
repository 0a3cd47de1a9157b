//! Text tick diagrams for the clock-staggering schedule: one reading row per
//! agent over the global step j, frozen ticks marked with `*`.

use chronoframe_core::scenarios::{desync_schedule, ScenarioError};

/// Renders the staggering schedule for `agents` clocks under one agent
/// ordering. Rows list each agent's clock reading after j global ticks; a
/// `*` marks ticks the clock sat out.
pub fn render_schedule(agents: usize, order: &[usize]) -> Result<String, ScenarioError> {
    let sched = desync_schedule(agents, order)?;
    let t0 = sched.t0();
    let order_text: Vec<String> = order.iter().map(|a| a.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!(
        "desynchronization schedule: N={agents}, order [{}], T0={t0}\n",
        order_text.join(",")
    ));
    out.push_str(&format!(
        "clocks end two ticks apart; every agent acts at its own reading {}\n\n",
        t0 + 2
    ));

    let width = t0.to_string().len() + 2;
    let label_width = format!("agent {}", agents - 1).len();
    let mut header = format!("{:<label_width$} :", "j");
    for j in 0..=t0 {
        header.push_str(&format!("{j:>width$}"));
    }
    out.push_str(&header);
    out.push('\n');
    for agent in 0..agents {
        let mut row = format!("{:<label_width$} :", format!("agent {agent}"));
        for j in 0..=t0 {
            let reading = sched.reading(agent, j);
            let frozen = j > 0 && reading == sched.reading(agent, j - 1);
            let cell =
                if frozen { format!("*{reading}") } else { reading.to_string() };
            row.push_str(&format!("{cell:>width$}"));
        }
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
