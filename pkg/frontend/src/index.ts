export * from "./api/types.js";
export * from "./api/blocks.js";
export * from "./api/client.js";
export * from "./core/camera.js";
export * from "./core/viewState.js";
export * from "./core/lasso.js";
export * from "./core/frame.js";
export * from "./render/canvas2d.js";
export * from "./ui/panels.js";
