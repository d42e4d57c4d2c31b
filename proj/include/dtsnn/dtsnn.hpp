#pragma once

#include "dtsnn/codec.hpp"
#include "dtsnn/dataset.hpp"
#include "dtsnn/encoder.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/fixed_point.hpp"
#include "dtsnn/image.hpp"
#include "dtsnn/lif.hpp"
#include "dtsnn/merger.hpp"
#include "dtsnn/model.hpp"
#include "dtsnn/pipeline.hpp"
#include "dtsnn/stream_io.hpp"
#include "dtsnn/synthetic.hpp"
#include "dtsnn/trace_io.hpp"
