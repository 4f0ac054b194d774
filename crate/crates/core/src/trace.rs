//! Append-only event log of sends, interceptions, wrapper hooks and swaps.

use std::fmt;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TraceMode {
    #[default]
    Off,
    /// Handler, log, wrapper and swap records only.
    Interceptions,
    /// Everything, including one record per message send.
    AllSends,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SendOutcome {
    Executed,
    Primitive,
    TrappedCi,
    TrappedDnu,
    IdentityBypass,
}

impl fmt::Display for SendOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SendOutcome::Executed => "executed",
            SendOutcome::Primitive => "primitive",
            SendOutcome::TrappedCi => "trapped-CI",
            SendOutcome::TrappedDnu => "trapped-DNU",
            SendOutcome::IdentityBypass => "identity-bypass",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HandlerAction {
    Forwarded,
    Special(String),
    Instance,
    MethodExec,
    Answered,
}

impl fmt::Display for HandlerAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HandlerAction::Forwarded => f.write_str("forwarded"),
            HandlerAction::Special(name) => write!(f, "special:{name}"),
            HandlerAction::Instance => f.write_str("instance"),
            HandlerAction::MethodExec => f.write_str("methodExec"),
            HandlerAction::Answered => f.write_str("answered"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum WrapPhase {
    Pre,
    Exec,
    Post,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceRecord {
    Send {
        depth: usize,
        class_name: String,
        selector: String,
        outcome: SendOutcome,
    },
    Handler {
        ordinal: u64,
        proxy: u32,
        selector: String,
        action: HandlerAction,
    },
    Log(String),
    Wrap {
        phase: WrapPhase,
        selector: String,
        depth: usize,
    },
    SwapOut {
        graph: u16,
        objects: usize,
        proxies: usize,
    },
    SwapIn {
        graph: u16,
        objects: usize,
    },
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Send {
                depth,
                class_name,
                selector,
                outcome,
            } => write!(f, "send\t{depth}\t{class_name}\t{selector}\t{outcome}"),
            TraceRecord::Handler {
                ordinal,
                proxy,
                selector,
                action,
            } => write!(f, "handler\t{ordinal}\t@{proxy}\t{selector}\t{action}"),
            TraceRecord::Log(text) => write!(f, "log\t{text}"),
            TraceRecord::Wrap { phase, selector, depth } => {
                let p = match phase {
                    WrapPhase::Pre => "pre",
                    WrapPhase::Exec => "exec",
                    WrapPhase::Post => "post",
                };
                write!(f, "wrap\t{p}\t{selector}\t{depth}")
            }
            TraceRecord::SwapOut {
                graph,
                objects,
                proxies,
            } => write!(f, "swap-out\t{graph}\t{objects}\t{proxies}"),
            TraceRecord::SwapIn { graph, objects } => write!(f, "swap-in\t{graph}\t{objects}"),
        }
    }
}

#[derive(Debug, Default)]
pub struct Trace {
    pub mode: TraceMode,
    records: Vec<TraceRecord>,
    clock: u64,
}

impl Trace {
    pub fn new(mode: TraceMode) -> Self {
        Trace {
            mode,
            ..Default::default()
        }
    }

    pub fn records_sends(&self) -> bool {
        self.mode == TraceMode::AllSends
    }

    pub fn records_events(&self) -> bool {
        self.mode != TraceMode::Off
    }

    /// Next logical timestamp. Advances even when recording is off.
    pub fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn push(&mut self, r: TraceRecord) {
        let keep = match r {
            TraceRecord::Send { .. } => self.records_sends(),
            _ => self.records_events(),
        };
        if keep {
            self.records.push(r);
        }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}
