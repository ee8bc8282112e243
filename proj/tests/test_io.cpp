#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace shapespline;
using namespace testing_support;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, int k, int m, int n)
{
    Trajectory t;
    t.header.units = "angstrom";
    std::uniform_real_distribution<double> gap(1e-3, 2.0);
    double time = -1.0 + gap(rng);
    for (int i = 0; i < n; ++i) {
        t.frames.push_back({gaussian(rng, k, m, 10.0), time});
        time += gap(rng);
    }
    return t;
}

void expect_same(const Trajectory& a, const Trajectory& b)
{
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        EXPECT_EQ(a.frames[i].time, b.frames[i].time);
        EXPECT_TRUE(a.frames[i].landmarks == b.frames[i].landmarks);
    }
}

std::string expect_error(ErrorCode code, const std::string& csv)
{
    try {
        parse_trajectory_csv(csv);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "no error for:\n" << csv;
    return {};
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "shapespline_io_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(TrajectoryCsv, RoundTripIsExact)
{
    std::mt19937_64 rng(91);
    for (int m : {1, 2, 3, 4}) {
        const auto t = random_trajectory(rng, m + 3, m, 5);
        const std::string text = write_trajectory_csv(t);
        const auto back = parse_trajectory_csv(text);
        expect_same(t, back);
        EXPECT_EQ(back.header.units, "angstrom");
        EXPECT_EQ(back.header.k, m + 3);
        EXPECT_EQ(write_trajectory_csv(back), text);
    }
}

TEST(TrajectoryCsv, HeaderIsOptional)
{
    const auto t = parse_trajectory_csv("time,landmark,x,y\n0,0,1,0\n0,1,0,1\n0,2,0,0\n1.5,0,1,1\n1.5,1,0,2\n1.5,2,3,0\n");
    ASSERT_EQ(t.frames.size(), 2u);
    EXPECT_EQ(t.header.k, 3);
    EXPECT_EQ(t.header.m, 2);
    EXPECT_EQ(t.frames[1].time, 1.5);
    EXPECT_EQ(t.frames[1].landmarks(2, 0), 3.0);
}

TEST(TrajectoryCsv, DuplicateTimeNamesRecord)
{
    const std::string csv = "time,landmark,x,y\n0,0,1,0\n0,1,0,1\n0,2,0,0\n"
                            "1,0,1,1\n1,1,0,2\n1,2,3,0\n"
                            "1,0,1,1\n1,1,0,2\n1,2,3,0\n";
    const auto msg = expect_error(ErrorCode::ValidationError, csv);
    EXPECT_NE(msg.find("record 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 8"), std::string::npos) << msg;
}

TEST(TrajectoryCsv, Errors)
{
    EXPECT_NE(expect_error(ErrorCode::ParseError, "time,landmark,x,y\n0,0,1,abc\n").find("line 2, column 4"),
              std::string::npos);
    expect_error(ErrorCode::ParseError, "t,l,x\n");
    expect_error(ErrorCode::ParseError, "");
    expect_error(ErrorCode::ParseError, "time,landmark,x,y\n0,0,1\n");
    expect_error(ErrorCode::ParseError, "time,landmark,x,y\n0,1,1,2\n");
    expect_error(ErrorCode::ParseError, "time,landmark,x,y\n0,0,1,2\n0,2,1,2\n");
    expect_error(ErrorCode::ParseError, "time,landmark,x,y\n0,0,1,2\n0.5,1,1,2\n");
    expect_error(ErrorCode::ValidationError, "time,landmark,x,y\n0,0,1,2\n0,1,1,inf\n0,2,0,0\n");
    // Two landmarks in the plane: k must exceed m.
    expect_error(ErrorCode::ValidationError, "time,landmark,x,y\n0,0,1,2\n0,1,3,4\n");
    // Frames with different landmark counts.
    expect_error(ErrorCode::ValidationError, "time,landmark,x\n0,0,1\n0,1,2\n1,0,1\n1,1,2\n1,2,3\n");
    expect_error(ErrorCode::ValidationError,
                 "# shapespline-trajectory k=3 m=1 n=2 mode=shape\ntime,landmark,x\n0,0,1\n0,1,2\n0,2,4\n");
}

TEST(TrajectoryJson, MatchesCsv)
{
    std::mt19937_64 rng(92);
    const auto t = random_trajectory(rng, 6, 3, 4);
    const auto from_json = parse_trajectory_json(trajectory_to_json(t).dump());
    const auto from_csv = parse_trajectory_csv(write_trajectory_csv(t));
    expect_same(from_json, from_csv);
    expect_same(t, from_json);
    EXPECT_EQ(from_json.header.units, "angstrom");

    try {
        parse_trajectory_json("{\"format\": \"other\"}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
    EXPECT_THROW(parse_trajectory_json("{not json"), Error);
    auto j = trajectory_to_json(t);
    j["frames"][2]["time"] = 0.0 + j["frames"][1]["time"].get<double>();
    try {
        parse_trajectory_json(j.dump());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ValidationError);
        EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos);
    }
}

TEST(Files, AtomicWriteAndDispatch)
{
    std::mt19937_64 rng(93);
    const auto t = random_trajectory(rng, 5, 2, 3);
    for (const char* name : {"traj.csv", "traj.json"}) {
        const auto path = scratch(name);
        write_trajectory(path, t);
        expect_same(t, read_trajectory(path));
    }
    const auto path = scratch("plain.txt");
    atomic_write(path, "first");
    atomic_write(path, "second");
    EXPECT_EQ(read_file(path), "second");
    for (const auto& entry : std::filesystem::directory_iterator(path.parent_path()))
        EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos) << entry.path();
    try {
        read_file(scratch("missing.csv"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
}

TEST(Formatting, DoublesRoundTrip)
{
    std::mt19937_64 rng(94);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 20 - 10);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

TEST(Formatting, Fnv1aReferenceValues)
{
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Formatting, CsvTable)
{
    CsvTable t({"a", "b"});
    t.comment("manifest=1");
    t.add({"1", "2"});
    EXPECT_EQ(t.str(), "# manifest=1\na,b\n1,2\n");
    EXPECT_THROW(t.add({"1"}), Error);
    EXPECT_EQ(coordinate_names(3), (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(coordinate_names(4).back(), "x4");
    EXPECT_EQ(parse_mode("size-and-shape"), Mode::size_and_shape);
    EXPECT_THROW(parse_mode("affine"), Error);
}
