//! The `mmk` command line: batch verbs with textual reports, and a REPL.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::kernel::Registry;
use crate::statemachine::Message;
use crate::value::{ObjId, Value};
use crate::xaction::{self, Semantics};
use crate::xbnf::lexer::{tokenize, TokenKind};
use crate::xocl::print::expr_to_string;
use crate::Env;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping state machine and VM budgets.
pub const MAX_STEPS_VAR: &str = "MMK_MAX_STEPS";
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// Output of one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    /// The lines, each newline-terminated.
    pub fn text(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

#[derive(Parser, Debug)]
#[command(name = "mmk", version, about = "Executable metamodelling kernel")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Load construct files and list what each produced
    Load {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check the constraints of every labelled snapshot object
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate files and print the display form of the last value
    Eval {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Apply a mapping to snapshot objects and print the result as a literal
    Map {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Path of the mapping class
        #[arg(long = "map")]
        mapping: String,
        /// Snapshot label of an argument (repeat for more arguments)
        #[arg(long, required = true)]
        input: Vec<String>,
    },
    /// Synchronisation rules
    Sync {
        #[command(subcommand)]
        cmd: SyncCmd,
    },
    /// State machines
    Sm {
        #[command(subcommand)]
        cmd: SmCmd,
    },
    /// XAction programs
    Xaction {
        #[command(subcommand)]
        cmd: XaCmd,
    },
    /// Read-eval-print loop on standard input
    Repl {
        /// Files to load first
        files: Vec<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SyncCmd {
    /// Run a rule set to a fixpoint
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Path of the rule set; defaults to the last one loaded
        #[arg(long)]
        model: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum SmCmd {
    /// Run a machine against a message queue
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Messages such as `toggle,set(1,true)`
        #[arg(long, default_value = "")]
        events: String,
        /// Path of the machine; defaults to the last one loaded
        #[arg(long)]
        machine: Option<String>,
        /// Path or snapshot label of the element the machine drives
        #[arg(long)]
        element: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Via {
    Eval,
    D1,
    D2,
    Vm,
}

#[derive(Subcommand, Debug)]
enum XaCmd {
    /// Run and print the final top-level values
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Via::Eval)]
        via: Via,
    },
    /// Print the first XOCL translation
    D1 { file: PathBuf },
    /// Print the type-erasing XOCL translation
    D2 { file: PathBuf },
    /// Print the machine code
    Compile { file: PathBuf },
    /// Pretty-print
    Pp { file: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_syntax() || matches!(e, Error::Usage(_)) {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The step budget from the environment.
pub fn max_steps() -> Result<usize> {
    match std::env::var(MAX_STEPS_VAR) {
        Err(_) => Ok(DEFAULT_MAX_STEPS),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Usage(format!("{MAX_STEPS_VAR} must be a positive integer, got {s:?}"))),
        },
    }
}

struct Session {
    reg: Registry,
    lines: Vec<String>,
    budget: usize,
}

impl Session {
    fn new() -> Result<Session> {
        let budget = max_steps()?;
        let mut reg = Registry::bootstrap();
        reg.max_steps = budget;
        Ok(Session { reg, lines: Vec::new(), budget })
    }

    fn push(&mut self, line: impl AsRef<str>) {
        self.lines.push(line.as_ref().trim_end().to_string());
    }

    /// Moves program output into the report.
    fn flush_output(&mut self) {
        let out = self.reg.take_output();
        for l in out.lines() {
            self.push(l);
        }
    }

    fn load(&mut self, files: &[PathBuf]) -> Result<Vec<Value>> {
        let mut all = Vec::new();
        for f in files {
            let src = read(f)?;
            let r = self.reg.load_str(&src);
            self.flush_output();
            all.extend(r?);
        }
        Ok(all)
    }

    fn find(&self, name: &str) -> Result<Value> {
        self.reg
            .resolve_path_str(name)
            .ok()
            .or_else(|| self.reg.resolve_name(Some(self.reg.root), name))
            .ok_or_else(|| Error::UnboundPath(name.to_string()))
    }

    fn label_or_path(&self, name: &str) -> Result<Value> {
        match self.reg.snapshot_label(name) {
            Some(o) => Ok(Value::Obj(o)),
            None => self.find(name),
        }
    }

    fn run(&mut self, cmd: Cmd) -> Result<i32> {
        match cmd {
            Cmd::Load { files } => {
                for f in &files {
                    let src = read(f)?;
                    let vs = self.reg.load_str(&src);
                    self.flush_output();
                    self.push(format!("LOADED {} ({} forms)", f.display(), vs?.len()));
                }
                Ok(EXIT_OK)
            }
            Cmd::Check { files } => self.check(&files),
            Cmd::Eval { files } => {
                let vs = self.load(&files)?;
                let v = vs.last().cloned().unwrap_or(Value::Null);
                let shown = self.reg.display(&v);
                self.push(shown);
                Ok(EXIT_OK)
            }
            Cmd::Map { files, mapping, input } => {
                self.load(&files)?;
                let class = match self.find(&mapping)? {
                    Value::Obj(c) if self.reg.is_class(c) => c,
                    _ => return Err(Error::Usage(format!("{mapping} is not a mapping class"))),
                };
                let m = self.reg.instantiate(class, vec![])?.as_obj().ok_or_else(|| Error::ty("mapping instance"))?;
                let mut args = Vec::new();
                for l in &input {
                    let o = self.reg.snapshot_label(l).ok_or_else(|| Error::Usage(format!("no snapshot label {l}")))?;
                    args.push(Value::Obj(o));
                }
                let out = self.reg.apply_mapping(m, args);
                self.flush_output();
                let lit = self.reg.literal(&out?);
                self.push(lit);
                Ok(EXIT_OK)
            }
            Cmd::Sync { cmd: SyncCmd::Run { files, max_iter, model } } => {
                if max_iter == 0 {
                    return Err(Error::Usage("--max-iter must be at least 1".into()));
                }
                let vs = self.load(&files)?;
                let m = match model {
                    Some(p) => self.find(&p)?,
                    None => vs
                        .iter()
                        .rev()
                        .find(|v| matches!(v, Value::Sync(_)))
                        .cloned()
                        .ok_or_else(|| Error::Usage("no synchronisation rules loaded".into()))?,
                };
                let Value::Sync(m) = m else { return Err(Error::Usage("not a synchronisation rule set".into())) };
                let r = self.reg.run_to_fixpoint(&m, max_iter);
                self.flush_output();
                let r = r?;
                for f in &r.fired {
                    let mut line = format!("FIRE {} {}", f.rule, if f.changed { "changed" } else { "unchanged" });
                    for (n, v) in &f.bindings {
                        line.push_str(&format!(" {n}={}", self.reg.display(v)));
                    }
                    self.push(line);
                }
                self.push(format!("STATUS {}", r.status.as_str()));
                Ok(EXIT_OK)
            }
            Cmd::Sm { cmd: SmCmd::Run { files, events, machine, element } } => {
                let msgs = Message::parse_list(&events)?;
                self.reg.load_state_machines()?;
                let vs = self.load(&files)?;
                let sm_class = self.reg.sm_class("StateMachine")?;
                let sm = match machine {
                    Some(p) => self.find(&p)?,
                    None => vs
                        .iter()
                        .rev()
                        .find(|v| matches!(v, Value::Obj(_)) && self.reg.is_kind_of(v, sm_class))
                        .cloned()
                        .ok_or_else(|| Error::Usage("no state machine loaded".into()))?,
                };
                let sm = match sm {
                    Value::Obj(o) if self.reg.is_kind_of(&sm, sm_class) => o,
                    _ => return Err(Error::Usage("not a state machine".into())),
                };
                let el = match element {
                    Some(e) => self.label_or_path(&e)?,
                    None => Value::Null,
                };
                let tr = self.reg.run_machine(sm, el, msgs, self.budget);
                self.flush_output();
                for l in tr?.report() {
                    self.push(l);
                }
                Ok(EXIT_OK)
            }
            Cmd::Xaction { cmd } => self.xaction(cmd),
            Cmd::Repl { .. } => Err(Error::Usage("repl reads standard input; run it from main".into())),
        }
    }

    fn check(&mut self, files: &[PathBuf]) -> Result<i32> {
        self.load(files)?;
        let objects: Vec<(String, ObjId)> =
            self.reg.snapshots.values().flat_map(|s| s.labels.iter().map(|(l, o)| (l.clone(), *o))).collect();
        if objects.is_empty() {
            return Err(Error::Usage("no labelled snapshot objects to check".into()));
        }
        let mut code = EXIT_OK;
        for (label, o) in objects {
            let rep = self.reg.check_constraints(o);
            self.flush_output();
            for c in rep.outcomes {
                if !c.passed {
                    code = EXIT_CHECK_FAILED;
                }
                self.push(format!("{} {}::{} {label}", if c.passed { "OK" } else { "FAIL" }, c.class_path, c.name));
            }
        }
        Ok(code)
    }

    fn xaction(&mut self, cmd: XaCmd) -> Result<i32> {
        let (XaCmd::Run { file, .. }
        | XaCmd::D1 { file }
        | XaCmd::D2 { file }
        | XaCmd::Compile { file }
        | XaCmd::Pp { file }) = &cmd;
        let p = xaction::parse_program(&read(file)?)?;
        let text = match cmd {
            XaCmd::Run { via, .. } => {
                let how = match via {
                    Via::Eval => Semantics::Eval,
                    Via::D1 => Semantics::Desugar1,
                    Via::D2 => Semantics::Desugar2,
                    Via::Vm => Semantics::Compile,
                };
                xaction::observation_text(&xaction::observe(&p, how, self.budget)?)
            }
            XaCmd::D1 { .. } => expr_to_string(&xaction::desugar1_program(&p)),
            XaCmd::D2 { .. } => expr_to_string(&xaction::desugar2_program(&p)?),
            XaCmd::Compile { .. } => xaction::compile_program(&p)?.code.iter().map(|i| format!("{i}\n")).collect(),
            XaCmd::Pp { .. } => xaction::stmt_to_string(&p),
        };
        for l in text.lines() {
            self.push(l);
        }
        Ok(EXIT_OK)
    }
}

fn usage_report(err: &clap::Error) -> Report {
    let rendered = err.render().to_string();
    let usage = rendered
        .lines()
        .find_map(|l| l.trim().strip_prefix("Usage:").map(|u| u.trim().to_string()))
        .unwrap_or_else(|| "mmk <COMMAND>".into());
    let first = match err.kind() {
        clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => "missing command".to_string(),
        _ => rendered
            .lines()
            .take_while(|l| !l.trim().is_empty() && !l.trim().starts_with("Usage:"))
            .collect::<Vec<_>>()
            .join(" ")
            .trim_start_matches("error:")
            .trim()
            .to_string(),
    };
    Report { lines: vec![format!("ERROR {}; usage: {usage}", one_line(&first))], exit_code: EXIT_USAGE }
}

fn parse(argv: &[String]) -> std::result::Result<Cli, Report> {
    Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Report {
            lines: e.render().to_string().lines().map(|l| l.trim_end().to_string()).collect(),
            exit_code: EXIT_OK,
        },
        _ => usage_report(&e),
    })
}

/// Runs one command. `argv[0]` is the program name. The arguments are
/// validated before any file is read.
pub fn run_command(argv: &[String]) -> Report {
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(r) => return r,
    };
    let mut s = match Session::new() {
        Ok(s) => s,
        Err(e) => {
            return Report { lines: vec![format!("ERROR {}", one_line(&e.to_string()))], exit_code: exit_code_for(&e) }
        }
    };
    match s.run(cli.cmd) {
        Ok(code) => Report { lines: s.lines, exit_code: code },
        Err(e) => {
            s.flush_output();
            s.push(format!("ERROR {}", one_line(&e.to_string())));
            Report { lines: s.lines, exit_code: exit_code_for(&e) }
        }
    }
}

/// Files to preload when `argv` asks for the REPL, or `None` for any
/// other command.
pub fn repl_files(argv: &[String]) -> Option<Vec<PathBuf>> {
    match Cli::try_parse_from(argv) {
        Ok(Cli { cmd: Cmd::Repl { files } }) => Some(files),
        _ => None,
    }
}

/// Open constructs minus closing `end`s; positive means more input is
/// needed. Text that does not tokenize counts as complete.
fn open_depth(src: &str) -> i64 {
    let Ok(toks) = tokenize(src) else { return 0 };
    let mut depth = 0;
    let mut prev_at = false;
    for t in &toks {
        match t.kind {
            TokenKind::Name if prev_at => depth += 1,
            TokenKind::Name if t.text == "if" || t.text == "let" => depth += 1,
            TokenKind::Name if t.text == "end" => depth -= 1,
            _ => {}
        }
        prev_at = t.is_punct("@");
    }
    depth
}

/// Interactive loop with an optional prompt.
pub struct Repl {
    reg: Registry,
    env: Env,
    prompt: Option<String>,
}

impl Repl {
    /// A session with the StateMachine language loaded.
    pub fn new() -> Result<Repl> {
        let mut reg = Registry::bootstrap();
        reg.max_steps = max_steps()?;
        reg.load_state_machines()?;
        Ok(Repl { reg, env: Env::new(), prompt: None })
    }

    pub fn with_prompt(mut self, p: &str) -> Repl {
        self.prompt = Some(p.to_string());
        self
    }

    /// Loads a file into the session's registry and environment.
    pub fn preload(&mut self, path: &Path) -> Result<()> {
        let src = read(path)?;
        self.reg.load_with_env(&src, &mut self.env)?;
        self.reg.take_output();
        Ok(())
    }

    /// Evaluates one complete input and returns the lines to print.
    pub fn eval_input(&mut self, src: &str) -> Vec<String> {
        let r = self.reg.load_with_env(src, &mut self.env);
        let mut out: Vec<String> = self.reg.take_output().lines().map(|l| l.trim_end().to_string()).collect();
        match r {
            Ok(vs) => {
                if let Some(v) = vs.last() {
                    out.push(format!("{} returned.", self.reg.display(v)));
                }
            }
            Err(e) => out.push(format!("ERROR {}", one_line(&e.to_string()))),
        }
        out
    }

    pub fn run<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> io::Result<()> {
        let mut buf = String::new();
        let mut lines = input.lines();
        loop {
            if let Some(p) = &self.prompt {
                write!(output, "{}", if buf.is_empty() { p.as_str() } else { "... " })?;
                output.flush()?;
            }
            let line = match lines.next() {
                Some(l) => l?,
                None => break,
            };
            buf.push_str(&line);
            buf.push('\n');
            if buf.trim().is_empty() {
                buf.clear();
                continue;
            }
            if open_depth(&buf) > 0 {
                continue;
            }
            for l in self.eval_input(&buf) {
                writeln!(output, "{l}")?;
            }
            buf.clear();
        }
        if !buf.trim().is_empty() {
            for l in self.eval_input(&buf) {
                writeln!(output, "{l}")?;
            }
        }
        Ok(())
    }
}

/// Runs a prompt-less REPL from `input` to `output`.
pub fn repl<R: BufRead, W: Write>(input: R, mut output: W) -> io::Result<()> {
    match Repl::new() {
        Ok(mut r) => r.run(input, output),
        Err(e) => writeln!(output, "ERROR {}", one_line(&e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn tmp(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mmk-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn eval_prints_display_form() {
        let f = tmp("one.xocl", "1+1");
        let r = run_command(&argv(&format!("mmk eval {}", f.display())));
        assert_eq!(r, Report { lines: vec!["2".into()], exit_code: 0 });
    }

    #[test]
    fn usage_errors_are_one_line() {
        for a in ["mmk", "mmk frobnicate", "mmk check", "mmk map x.xmf --input a"] {
            let r = run_command(&argv(a));
            assert_eq!(r.exit_code, EXIT_USAGE, "{a}");
            assert_eq!(r.lines.len(), 1, "{a}");
            assert!(r.lines[0].starts_with("ERROR ") && r.lines[0].contains("usage:"), "{:?}", r.lines);
        }
    }

    #[test]
    fn missing_file_is_a_usage_error() {
        let r = run_command(&argv("mmk eval /nonexistent/nowhere.xocl"));
        assert_eq!(r.exit_code, EXIT_USAGE);
    }

    #[test]
    fn syntax_and_runtime_errors() {
        let bad = tmp("bad.xocl", "1 +");
        assert_eq!(run_command(&argv(&format!("mmk eval {}", bad.display()))).exit_code, EXIT_USAGE);
        let div = tmp("div.xocl", "1 / 0");
        let r = run_command(&argv(&format!("mmk eval {}", div.display())));
        assert_eq!(r.exit_code, EXIT_RUNTIME);
        assert!(r.lines.last().unwrap().starts_with("ERROR"));
    }

    #[test]
    fn open_depth_counts_constructs() {
        assert_eq!(open_depth("@State X end"), 0);
        assert_eq!(open_depth("@Class A\n @Attribute x : Integer end"), 1);
        assert_eq!(open_depth("if true then 1"), 1);
        assert_eq!(open_depth("\"unterminated"), 0);
    }

    #[test]
    fn repl_state_and_errors() {
        let input = "@State X end\n1+1\n1 +\n@Class Q\n  @Attribute n : Integer end\nend\nQ.name\n";
        let mut out = Vec::new();
        repl(input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "<State X> returned.");
        assert_eq!(lines[1], "2 returned.");
        assert!(lines[2].starts_with("ERROR"));
        assert_eq!(lines[4], "Q returned.");
    }
}
