#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

std::string run_cli(const std::string& args, int& exit_code) {
    const char* cli = std::getenv("GM_CLI");
    const char* fix = std::getenv("GM_FIXTURES");
    REQUIRE(cli != nullptr);
    REQUIRE(fix != nullptr);
    std::string cmd = std::string(cli) + " " + args + " 2>&1";
    size_t pos;
    while ((pos = cmd.find("$FIX")) != std::string::npos) cmd.replace(pos, 4, fix);
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
    int status = pclose(pipe);
    exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

}  // namespace

TEST_CASE("cli: affine line counts are 2, 4, 8, 16") {
    int code = 0;
    std::string out = run_cli("count --config $FIX/line.gm --q 2 --levels 0..3", code);
    CHECK(code == 0);
    CHECK(out.find("0\t2\t2\t1") != std::string::npos);
    CHECK(out.find("1\t2\t4\t1") != std::string::npos);
    CHECK(out.find("2\t2\t8\t1") != std::string::npos);
    CHECK(out.find("3\t2\t16\t1") != std::string::npos);
}

TEST_CASE("cli: node measure at q=3 is 4/3, within 3^-4") {
    int code = 0;
    std::string out = run_cli("measure --config $FIX/node.gm --q 3 --precision 4", code);
    CHECK(code == 0);
    CHECK(out.find("value\t4/3") != std::string::npos);
    CHECK(out.find("provenance\tstabilized") != std::string::npos);
}

TEST_CASE("cli: cov-check on the blowup fixture passes") {
    int code = 0;
    std::string out =
        run_cli("cov-check --config $FIX/blowup.gm --q 2 --precision 4 --integrand alpha1", code);
    CHECK(code == 0);
    CHECK(out.find("verdict\tPASS") != std::string::npos);
}

TEST_CASE("cli: failure classes are machine readable") {
    int code = 0;
    std::string out = run_cli("count --config $FIX/node.gm --q 3 --levels 6..6 --budget 1000", code);
    CHECK(code == 3);  // BUDGET
    CHECK(out.find("failure-class: BUDGET") != std::string::npos);
    CHECK(out.find("budget") != std::string::npos);  // names the requirement

    std::string parse_out = run_cli("count --config $FIX/does_not_exist.gm", code);
    CHECK(code == 2);  // PARSE
    CHECK(parse_out.find("failure-class: PARSE") != std::string::npos);

    std::string pre_out = run_cli("measure --config $FIX/line.gm --scheme nowhere", code);
    CHECK(code == 4);  // PRECONDITION
    CHECK(pre_out.find("failure-class: PRECONDITION") != std::string::npos);
}

TEST_CASE("cli: every fixture runs an end-to-end command under the default budget") {
    struct Job {
        const char* fixture;
        const char* args;
    };
    for (const Job& j : {
             Job{"line.gm", "integrate --config $FIX/line.gm --q 2 --precision 5 --integrand multx"},
             Job{"plane.gm", "integrate --config $FIX/plane.gm --q 2 --precision 4 --integrand multxy"},
             Job{"conic.gm", "count --config $FIX/conic.gm --q 2,3 --levels 0..3"},
             Job{"ci_graph.gm", "count --config $FIX/ci_graph.gm --q 2 --levels 0..2"},
             Job{"node.gm", "series --config $FIX/node.gm --q 2 --levels 0..4"},
             Job{"cusp.gm", "greenberg --config $FIX/cusp.gm --q 2 --point-level 1 --horizon 6"},
             Job{"blowup.gm", "cov-check --config $FIX/blowup.gm --q 2 --precision 4 --integrand alpha0"},
             Job{"blowup2.gm", "ordjac --config $FIX/blowup2.gm --morphism outer --point \"pi, 1\" "
                               "--point-level 3 --q 2"},
             Job{"node_model.gm", "cov-check --config $FIX/node_model.gm --q 2 --precision 4 "
                                  "--integrand alpha0"},
             Job{"etale_pair.gm", "count --config $FIX/etale_pair.gm --scheme as --q 2 --levels 0..3"},
         }) {
        int code = 0;
        std::string out = run_cli(j.args, code);
        CHECK(code == 0);
        if (code != 0) MESSAGE(j.fixture << ":\n" << out);
    }
}
