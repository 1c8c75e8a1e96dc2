#include "cutlocus/jobs.hpp"
#include "cutlocus/types.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

using namespace cutlocus;

namespace {

struct CommandArgs {
  std::string job;
  std::string out;
  int threads = 0;
  double tol = 0.0;
  std::string kind = "minus";
  std::optional<double> a, b;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cut loci, split loci and conjugate descending curves"};
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::unique_ptr<CommandArgs>>> subs;
  for (const auto& name : job_commands()) {
    auto args = std::make_unique<CommandArgs>();
    CLI::App* sub = app.add_subcommand(name, "run a '" + name + "' job");
    sub->add_option("--job", args->job, "JSON job file");
    sub->add_option("--out", args->out, "output directory (overrides the job's \"out\")");
    sub->add_option("--threads", args->threads, "worker threads (default CUTLOCUS_THREADS, else all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", args->tol, "main tolerance of the command")->check(CLI::PositiveNumber);
    if (name == "d4-roots") {
      sub->add_option("--kind", args->kind, "minus or plus")->check(CLI::IsMember({"minus", "plus"}));
      sub->add_option("--a", args->a, "first coordinate of the radial direction");
      sub->add_option("--b", args->b, "second coordinate of the radial direction");
    } else {
      sub->needs(sub->get_option("--job"));
      sub->get_option("--job")->required();
    }
    subs.emplace_back(sub, std::move(args));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (auto& [sub, args] : subs) {
    if (!sub->parsed()) continue;
    JobSpec job;
    try {
      if (!args->job.empty()) {
        job = load_job(args->job);
        if (job.command != sub->get_name())
          throw ConfigError("job file runs '" + job.command + "', not '" + sub->get_name() + "'");
      } else {
        job.command = sub->get_name();
      }
      if (job.command == "d4-roots") {
        if (sub->count("--kind")) job.params["kind"] = args->kind;
        if (args->a) job.params["a"] = *args->a;
        if (args->b) job.params["b"] = *args->b;
      }
      if (!args->out.empty()) job.out_dir = args->out;
      if (job.out_dir.empty()) job.out_dir = ".";
    } catch (const Error& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return 2;
    }
    RunSettings rs;
    rs.threads = args->threads;
    rs.tol = args->tol;
    return run_job_guarded(job, rs, std::cout, std::cerr);
  }
  return 2;
}
