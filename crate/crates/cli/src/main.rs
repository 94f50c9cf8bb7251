use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use legalc_core::backend::{self, EmitOptions};
use legalc_core::dcalc_to_lcalc::Translator;
use legalc_core::error::{format_error, Error, ErrorKind, SourceMap, Style};
use legalc_core::pipeline::{self, Compiled};
use legalc_core::{dcalc, desugar, lcalc, scopelang, selftest};

#[derive(Parser)]
#[command(name = "legalc", version, about = "Compiler and interpreter for a literate legal DSL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Desugared,
    Scopelang,
    Dcalc,
    Lcalc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Extra {
    SymbolMap,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, desugar, sort and typecheck a program.
    Typecheck { file: PathBuf },
    /// Run a scope with the reference interpreter.
    Interpret {
        file: PathBuf,
        #[arg(long)]
        scope: String,
        /// `var=value` or `Scope.var=value`; the value is a literal.
        #[arg(long = "bind", value_parser = parse_binding)]
        bindings: Vec<(String, String)>,
        /// Log how each definition was resolved.
        #[arg(long)]
        trace: bool,
    },
    /// Generate a Python module.
    Transpile {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write `<out>.symbols.json`.
        #[arg(long)]
        emit: Option<Extra>,
        /// Generate a `__main__` block running this scope.
        #[arg(long)]
        scope: Option<String>,
        #[arg(long = "bind", value_parser = parse_binding, requires = "scope")]
        bindings: Vec<(String, String)>,
    },
    /// Print an intermediate representation.
    Emit {
        file: PathBuf,
        #[arg(long)]
        stage: Stage,
    },
    /// Differential test of the translation on random terms.
    Selftest {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.to_owned())),
        _ => Err(format!("expected `var=value`, got `{s}`")),
    }
}

fn style() -> Style {
    Style {
        color: std::env::var_os("LEGALC_NO_COLOR").is_none() && std::io::stderr().is_terminal(),
    }
}

enum Failure {
    Usage(String),
    Semantic(Error, SourceMap),
}

fn read(file: &Path) -> Result<(String, String), Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
    Ok((file.display().to_string(), text))
}

fn sources(name: &str, text: &str) -> SourceMap {
    let mut s = SourceMap::new();
    s.add(name.into(), text.into());
    s
}

fn compile(file: &Path) -> Result<Compiled, Failure> {
    let (name, text) = read(file)?;
    pipeline::compile(&name, &text).map_err(|e| Failure::Semantic(e, sources(&name, &text)))
}

fn with_bindings(mut s: SourceMap, bindings: &[(String, String)]) -> SourceMap {
    for (k, v) in bindings {
        s.add(pipeline::binding_file(k).into(), v.as_str().into());
    }
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Typecheck { file } => {
            let c = compile(&file)?;
            println!("Typechecking successful: {} scope(s)", c.scopes.scopes.len());
        }
        Command::Interpret {
            file,
            scope,
            bindings,
            trace,
        } => {
            let c = compile(&file)?;
            match pipeline::interpret(&c, &scope, &bindings, trace) {
                Ok(r) => {
                    for l in r.trace.iter().chain(&r.lines(&scope)) {
                        println!("{l}");
                    }
                }
                Err((e, log)) => {
                    for l in log {
                        println!("{l}");
                    }
                    return Err(Failure::Semantic(e, with_bindings(c.sources.clone(), &bindings)));
                }
            }
        }
        Command::Transpile {
            file,
            out,
            emit,
            scope,
            bindings,
        } => {
            let c = compile(&file)?;
            let mut tr = Translator::default();
            let main = match &scope {
                Some(s) => {
                    let args = pipeline::arguments(&c, s, &bindings)
                        .map_err(|e| Failure::Semantic(e, with_bindings(c.sources.clone(), &bindings)))?;
                    let term = tr.translate(&pipeline::scope_call(s, args));
                    let names = c.scopes.scope(s).map(|sc| sc.vars.iter().map(|v| v.name.to_string()).collect()).unwrap_or_default();
                    Some((term, s.clone(), names))
                }
                None => None,
            };
            let mut lp = c.lcalc();
            // Helpers needed only by the main block.
            for (n, t) in tr.helper_tops() {
                if !lp.tops.contains_key(&n) {
                    lp.tops.shift_insert(0, n, t);
                }
            }
            let source_file = file.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let unit = backend::emit(&lp, &c.scopes, backend::default_names(&c.program), &EmitOptions { source_file, main });
            let write = |p: &Path, s: &str| std::fs::write(p, s).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())));
            write(&out, &unit.source)?;
            if let Some(Extra::SymbolMap) = emit {
                let p = out.with_extension("symbols.json");
                write(&p, &unit.symbol_map_json())?;
            }
        }
        Command::Emit { file, stage } => {
            let text = match stage {
                Stage::Desugared => {
                    let (name, text) = read(&file)?;
                    let ds = pipeline::desugar_only(&name, &text).map_err(|e| Failure::Semantic(e, sources(&name, &text)))?;
                    desugar::print_desugared(&ds)
                }
                Stage::Scopelang => scopelang::print_program(&compile(&file)?.scopes),
                Stage::Dcalc => dcalc::print_program(&compile(&file)?.program),
                Stage::Lcalc => lcalc::print_program(&compile(&file)?.lcalc()),
            };
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
        Command::Selftest { n, seed } => {
            let r = pipeline::with_big_stack(|| selftest::run(n, seed));
            print!("{r}");
            if !r.ok() {
                return Err(Failure::Semantic(
                    Error::new(ErrorKind::Type, format!("{} of {n} generated terms disagree", n - r.agree)),
                    SourceMap::new(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Semantic(e, src)) => {
            eprint!("{}", format_error(&e, &src, style()));
            ExitCode::from(1)
        }
    }
}
