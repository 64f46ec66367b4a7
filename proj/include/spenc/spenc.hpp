#pragma once

#include "spenc/count_matrix.hpp"
#include "spenc/elbo.hpp"
#include "spenc/evaluate.hpp"
#include "spenc/fit.hpp"
#include "spenc/io.hpp"
#include "spenc/link.hpp"
#include "spenc/model.hpp"
#include "spenc/optimizer.hpp"
#include "spenc/pipeline.hpp"
#include "spenc/rng.hpp"
#include "spenc/scaling.hpp"
#include "spenc/serialize.hpp"
#include "spenc/synthetic.hpp"
#include "spenc/transforms.hpp"
#include "spenc/variational.hpp"
