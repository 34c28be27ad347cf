# Highway PBS agents: driver models, predictors, search, planners
