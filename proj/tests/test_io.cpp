#include "oracles.hpp"

#include "svtv/image_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace svtv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "svtv_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(Raster, RoundTripIsExact)
{
    ImageGrid img = oracle::random_image(7, 5, 1, -3, 3);
    img(0, 0) = 1e-300;
    const fs::path path = scratch("a.ggmap");
    write_raster(path, img, "p");
    const RasterFile back = read_raster(path);
    EXPECT_EQ(back.field, "p");
    EXPECT_EQ(back.raster, img);
    EXPECT_EQ(read_raster(path, "p"), img);
    EXPECT_THROW(read_raster(path, "alpha"), IoError);
}

TEST(Raster, HeaderLayout)
{
    const fs::path path = scratch("b.ggmap");
    write_raster(path, ImageGrid(2, 3, 1.0), "alpha");
    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "GGMAP 2 3 alpha");
    EXPECT_EQ(fs::file_size(path), header.size() + 1 + 6 * 8);
}

TEST(Raster, MalformedInputs)
{
    const fs::path bad = scratch("bad.ggmap");
    std::ofstream(bad) << "NOTMAP 2 2 p\n";
    EXPECT_THROW(read_raster(bad), IoError);
    const fs::path truncated = scratch("trunc.ggmap");
    std::ofstream(truncated, std::ios::binary) << "GGMAP 2 2 p\n12345678";
    EXPECT_THROW(read_raster(truncated), IoError);
    EXPECT_THROW(read_raster(scratch("missing.ggmap")), IoError);
    EXPECT_THROW(write_raster(scratch("c.ggmap"), ImageGrid(1, 1), "two words"), std::invalid_argument);
}

TEST(Png, SixteenBitRoundTrip)
{
    const ImageGrid img = oracle::random_image(9, 13, 2);
    const fs::path path = scratch("img16.png");
    write_image(path, img, 16);
    const ImageGrid back = read_image(path);
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], 0.5 / 65535.0 + 1e-12);
}

TEST(Png, EightBitRoundTripAndClamping)
{
    ImageGrid img = oracle::random_image(4, 6, 3);
    img(0, 0) = -0.2;
    img(0, 1) = 1.7;
    const fs::path path = scratch("img8.png");
    write_image(path, img, 8);
    const ImageGrid back = read_image(path);
    EXPECT_EQ(back(0, 0), 0.0);
    EXPECT_EQ(back(0, 1), 1.0);
    for (std::size_t i = 2; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], 0.5 / 255.0 + 1e-12);
}

TEST(Pgm, RoundTrip)
{
    const ImageGrid img = oracle::random_image(5, 5, 4);
    for (int depth : {8, 16}) {
        const fs::path path = scratch("img" + std::to_string(depth) + ".pgm");
        write_image(path, img, depth);
        const ImageGrid back = read_image(path);
        const double tol = 0.5 / (depth == 8 ? 255.0 : 65535.0) + 1e-12;
        for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], tol);
    }
}

TEST(Images, UnsupportedAndMissing)
{
    EXPECT_THROW(write_image(scratch("x.bmp"), ImageGrid(2, 2)), IoError);
    EXPECT_THROW(read_image(scratch("nothing.png")), IoError);
    const fs::path junk = scratch("junk.png");
    std::ofstream(junk) << "not a png";
    EXPECT_THROW(read_image(junk), IoError);
}

TEST(Images, MaskConversion)
{
    Mask m(3, 4);
    m.set(5, true);
    m.set(11, true);
    EXPECT_EQ(image_to_mask(mask_to_image(m)), m);
    const fs::path path = scratch("mask.png");
    write_image(path, mask_to_image(m), 8);
    EXPECT_EQ(image_to_mask(read_image(path)), m);
}

TEST(Images, DisplayRescale)
{
    const ImageGrid img(1, 3, std::vector<double>{2.0, 4.0, 3.0});
    const ImageGrid out = rescale_for_display(img);
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[1], 1.0);
    EXPECT_EQ(out[2], 0.5);
    const ImageGrid flat = rescale_for_display(ImageGrid(2, 2, 5.0));
    for (double x : flat.pixels()) EXPECT_EQ(x, 0.0);
}
