//! Linear and logistic regression with an unregularized intercept.

mod logistic;
mod regression;

pub use logistic::{
    default_logreg_optimizer, logreg_classify, logreg_objective, logreg_train, sigmoid, softplus, LogisticObjective,
    LogisticRegressionModel,
};
pub use regression::{linreg_predict, linreg_train, LinearRegressionModel};
