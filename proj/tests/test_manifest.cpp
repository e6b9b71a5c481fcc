#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "hyperfuse/errors.hpp"
#include "hyperfuse/manifest.hpp"
#include "hyperfuse/png_io.hpp"

using namespace hyperfuse;

TEST_CASE("fnv-1a 64 reference vectors") {
    // published offset basis / single-byte values for the 64-bit variant
    const std::uint8_t a[] = {'a'};
    CHECK(fnv1a64_hex(nullptr, 0) == "cbf29ce484222325");
    CHECK(fnv1a64_hex(a, 1) == "af63dc4c8601ec8c");
    const std::uint8_t foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
    CHECK(fnv1a64_hex(foobar, 6) == "85944171f73967e8");
}

TEST_CASE("file hash matches the in-memory hash") {
    hftest::TempDir tmp("manifest");
    const std::string payload = "hyperspectral";
    {
        std::ofstream out(tmp.path("f.bin"), std::ios::binary);
        out << payload;
    }
    CHECK(hash_file(tmp.path("f.bin")) ==
          fnv1a64_hex(reinterpret_cast<const std::uint8_t*>(payload.data()),
                      payload.size()));
    CHECK_THROWS_AS(hash_file(tmp.path("missing.bin")), IoFailure);
}

TEST_CASE("manifests are timestamp-free and rerun-stable") {
    const auto a = make_manifest(7, {{"tau", 3.0}});
    const auto b = make_manifest(7, {{"tau", 3.0}});
    CHECK(a.dump() == b.dump());
    CHECK(a.at("tool") == "hyperfuse");
    CHECK(a.at("seed") == 7);
    CHECK(a.dump().find("time") == std::string::npos);

    hftest::TempDir tmp("manifest2");
    write_manifest(a, tmp.path("m.json"));
    write_manifest(b, tmp.path("m2.json"));
    CHECK(hftest::read_file(tmp.path("m.json")) ==
          hftest::read_file(tmp.path("m2.json")));
}

TEST_CASE("png writer emits a valid signature and stable bytes") {
    hftest::TempDir tmp("png");
    BandImage img;
    img.width = 9;
    img.height = 5;
    img.channels = 3;
    img.pixels.resize(9 * 5 * 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<float>((i * 37) % 256);

    write_png(img, tmp.path("a.png"));
    write_png(img, tmp.path("b.png"));
    const auto a = hftest::read_file(tmp.path("a.png"));
    CHECK(a == hftest::read_file(tmp.path("b.png")));
    REQUIRE(a.size() > 8);
    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (int i = 0; i < 8; ++i) CHECK(a[i] == sig[i]);
    // IHDR follows immediately with the image dimensions
    CHECK(a[16 + 3] == 9);
    CHECK(a[20 + 3] == 5);

    // grayscale path
    BandImage gray;
    gray.width = 4;
    gray.height = 4;
    gray.channels = 1;
    gray.pixels.assign(16, 100.0f);
    write_png(gray, tmp.path("g.png"));
    CHECK(!hftest::read_file(tmp.path("g.png")).empty());
}
